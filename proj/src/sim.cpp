#include "ipd/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace ipd {

std::string to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::MixedPreemption: return "mixed_preemption";
    case PolicyKind::BestEffortJIT: return "best_effort_jit";
    case PolicyKind::AtomicRestart: return "atomic_restart";
    case PolicyKind::AtomicChargeAware: return "atomic_charge_aware";
    case PolicyKind::EventFirst: return "event_first";
  }
  return "unknown";
}

PolicyKind policy_from_string(const std::string& name) {
  for (auto p : all_policies()) {
    if (to_string(p) == name) {
      return p;
    }
  }
  throw std::invalid_argument("unknown policy '" + name + "'");
}

const std::vector<PolicyKind>& all_policies() {
  static const std::vector<PolicyKind> all{PolicyKind::MixedPreemption, PolicyKind::BestEffortJIT,
                                           PolicyKind::AtomicRestart, PolicyKind::AtomicChargeAware,
                                           PolicyKind::EventFirst};
  return all;
}

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::Release: return "Release";
    case EventKind::Dispatch: return "Dispatch";
    case EventKind::Preempt: return "Preempt";
    case EventKind::Complete: return "Complete";
    case EventKind::DeadlineMiss: return "DeadlineMiss";
    case EventKind::Checkpoint: return "Checkpoint";
    case EventKind::Restore: return "Restore";
    case EventKind::EnterStandby: return "EnterStandby";
    case EventKind::Wake: return "Wake";
    case EventKind::PowerOff: return "PowerOff";
    case EventKind::PowerOn: return "PowerOn";
    case EventKind::ChargeWait: return "ChargeWait";
  }
  return "Unknown";
}

void SimConfig::validate() const {
  capacitor.validate();
  if (!(tick_s > 0.0)) {
    throw DomainError("tick must be positive");
  }
  const double ticks = horizon_s / tick_s;
  if (horizon_s < 0.0 || std::fabs(ticks - std::round(ticks)) > 1e-6) {
    throw DomainError("horizon must be a non-negative multiple of the tick");
  }
  if (checkpoint_store_s < 0.0 || checkpoint_restore_s < 0.0) {
    throw DomainError("checkpoint costs must be non-negative");
  }
  if (checkpoint_power_w && *checkpoint_power_w < 0.0) {
    throw DomainError("checkpoint power must be non-negative");
  }
  if (initial_voltage_v && (*initial_voltage_v < 0.0 || *initial_voltage_v > capacitor.v_max)) {
    throw DomainError("initial voltage outside [0, v_max]");
  }
}

double SimMetrics::success_ratio() const {
  std::int64_t released = 0;
  std::int64_t ok = 0;
  for (const auto& c : chains) {
    released += c.released;
    ok += c.completed_by_deadline;
  }
  return released == 0 ? 1.0 : static_cast<double>(ok) / static_cast<double>(released);
}

const ChainMetrics* SimMetrics::find(int chain_id) const {
  for (const auto& c : chains) {
    if (c.chain_id == chain_id) {
      return &c;
    }
  }
  return nullptr;
}

namespace {

constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::max();
constexpr double kInf = std::numeric_limits<double>::infinity();

std::int64_t us_of(double s) { return std::llround(s * 1e6); }
std::int64_t ceil_us(double s) { return static_cast<std::int64_t>(std::ceil(s * 1e6 - 1e-6)); }

enum class Phase { Operation, Checkpointing, Standby, PowerOff, Restoring };
enum class CycleKind { Standby, PowerOff };

struct ChainRt {
  const ChainSpec* spec = nullptr;
  int priority = 0;
  std::int64_t period = 0;
  std::int64_t deadline = 0;
  std::vector<std::int64_t> wcet;
  std::vector<char> atomic;
  std::vector<double> power;
  std::vector<char> unservable;
  std::int64_t next_release = 0;

  bool active = false;
  std::int64_t seq = -1;
  std::int64_t release = 0;
  std::int64_t abs_deadline = 0;
  std::size_t task = 0;
  std::int64_t executed = 0;
  bool missed = false;
  std::size_t record = 0;

  std::int64_t image_seq = -1;
  std::size_t image_task = 0;
  std::int64_t image_executed = 0;
};

class Engine {
public:
  Engine(const Taskset& ts, const SimConfig& cfg, ChargeEstimator estimator,
         const DecisionObserver& observer)
      : cfg_(cfg), estimator_(std::move(estimator)), observer_(observer) {
    cfg_.validate();
    tick_ = std::max<std::int64_t>(us_of(cfg.tick_s), 1);
    horizon_ = us_of(cfg.horizon_s);
    ideal_ = cfg.harvest.mode() == HarvestMode::Ideal;
    const auto& cap = cfg.capacitor;
    e_min_ = energy_of_voltage(cap, cap.v_min);
    e_off_ = energy_of_voltage(cap, cap.v_off);
    e_on_ = energy_of_voltage(cap, cap.v_on);
    e_max_ = energy_of_voltage(cap, cap.v_max);
    tol_ = 1e-12 * e_max_;
    ckpt_power_ = cfg.checkpoint_power_w.value_or(ts.max_power());
    store_ = us_of(cfg.checkpoint_store_s);
    restore_ = us_of(cfg.checkpoint_restore_s);
    energy_ = ideal_ ? e_max_ : energy_of_voltage(cap, cfg.initial_voltage_v.value_or(cap.v_on));

    const bool all_atomic =
        cfg.policy == PolicyKind::AtomicRestart || cfg.policy == PolicyKind::AtomicChargeAware;
    for (const auto& c : ts.chains) {
      ChainRt rt;
      rt.spec = &c;
      rt.priority = c.priority;
      rt.period = us_of(c.period_s);
      rt.deadline = us_of(c.deadline_s);
      rt.next_release = us_of(c.offset_s);
      for (const auto& t : c.tasks) {
        rt.wcet.push_back(std::max<std::int64_t>(us_of(t.wcet_s), 1));
        rt.atomic.push_back(all_atomic || t.atomic);
        rt.power.push_back(t.power_w);
        rt.unservable.push_back(0);
      }
      chains_.push_back(std::move(rt));
      result_.metrics.chains.push_back(ChainMetrics{c.id, c.name, c.priority, 0, 0, 0, 0});
    }
    result_.metrics.initial_energy_j = energy_;
  }

  SimResult run() {
    observe_rate();
    while (true) {
      process_instant();
      if (now_ >= horizon_) {
        break;
      }
      if (phase_ == Phase::Operation) {
        decide();
        settle_phases();
        if (phase_ == Phase::Operation && running_ < 0 && pending_decision_) {
          pending_decision_ = false;
          decide();
          settle_phases();
        }
      }
      const std::int64_t next = next_event_time();
      advance(next);
    }
    finish();
    return std::move(result_);
  }

private:
  // --- policy traits -------------------------------------------------------
  bool admission_policy() const {
    return cfg_.policy == PolicyKind::MixedPreemption || cfg_.policy == PolicyKind::EventFirst ||
           cfg_.policy == PolicyKind::AtomicChargeAware;
  }
  bool checkpointing_policy() const {
    return cfg_.policy == PolicyKind::MixedPreemption || cfg_.policy == PolicyKind::EventFirst ||
           cfg_.policy == PolicyKind::BestEffortJIT || cfg_.policy == PolicyKind::AtomicChargeAware;
  }
  bool preemptive(const ChainRt& c) const {
    switch (cfg_.policy) {
      case PolicyKind::BestEffortJIT: return true;
      case PolicyKind::AtomicRestart:
      case PolicyKind::AtomicChargeAware: return false;
      default: return !c.atomic[c.task];
    }
  }
  // Rank of a chain's current (or first, for future releases) task.
  std::pair<int, int> rank(const ChainRt& c, std::size_t task) const {
    const int band = cfg_.policy == PolicyKind::EventFirst && c.atomic[task] ? 1 : 0;
    return {band, c.priority};
  }

  // --- helpers -------------------------------------------------------------
  double now_s() const { return static_cast<double>(now_) * 1e-6; }
  double voltage() const { return voltage_of_energy(cfg_.capacitor, energy_); }
  bool at_boundary() const { return now_ % tick_ == 0; }
  std::int64_t ceil_tick(std::int64_t t) const { return ((t + tick_ - 1) / tick_) * tick_; }
  std::int64_t next_tick_after(std::int64_t t) const { return (t / tick_ + 1) * tick_; }
  double rate_now() const { return cfg_.harvest.rate_at(now_s()); }
  CapacitorState cap_state() const { return CapacitorState(cfg_.capacitor, energy_); }

  void emit(EventKind kind, int chain, int task, std::string detail = {}) {
    if (!cfg_.record_trace) {
      return;
    }
    result_.trace.push_back(TraceEvent{now_, kind, chain, task, voltage(), std::move(detail)});
  }
  void emit(EventKind kind, const ChainRt& c, std::string detail = {}) {
    emit(kind, c.spec->id, static_cast<int>(c.task), std::move(detail));
  }

  void observe_rate() {
    if (!ideal_) {
      estimator_.observe(now_s(), rate_now());
    }
  }
  double harvest_estimate() {
    if (ideal_) {
      return kInf;
    }
    if (!cfg_.estimator_prior_w && estimator_.size() == 0) {
      return rate_now();
    }
    return estimator_.estimate(now_s());
  }

  // Voltage an atomic task (full job) or a non-atomic remainder needs before running.
  double required_voltage(const ChainRt& c, double harvest_w, bool* unservable = nullptr) const {
    const double remaining_s =
        static_cast<double>(c.atomic[c.task] ? c.wcet[c.task] : c.wcet[c.task] - c.executed) * 1e-6;
    if (!(harvest_w > 0.0)) {
      if (unservable) *unservable = c.power[c.task] > 0.0;
      return cfg_.capacitor.v_max;
    }
    const double q = charging_demand(remaining_s, c.power[c.task], harvest_w);
    const double v = uncapped_threshold_voltage(q, harvest_w, cfg_.capacitor);
    if (unservable) *unservable = v > cfg_.capacitor.v_max * (1.0 + 1e-12);
    return std::min(v, cfg_.capacitor.v_max);
  }

  double harvest_time_to(double v_target, double harvest_w) const {
    const double needed = energy_of_voltage(cfg_.capacitor, v_target) - energy_;
    if (needed <= 0.0) {
      return 0.0;
    }
    return harvest_w > 0.0 ? harvesting_time(cap_state(), v_target, harvest_w) : kInf;
  }

  // Harvesting time before a standby wake: the restore on wake must not eat into the threshold.
  double standby_time_to(double v_target, double harvest_w) const {
    const double target =
        std::min(energy_of_voltage(cfg_.capacitor, v_target) + restore_energy(), e_max_);
    if (target <= energy_) {
      return 0.0;
    }
    return harvest_w > 0.0 ? (target - energy_) / harvest_w : kInf;
  }
  double restore_energy() const { return static_cast<double>(restore_) * 1e-6 * ckpt_power_; }

  std::int64_t next_release_ranked_above(std::pair<int, int> r) const {
    std::int64_t t = kNever;
    for (const auto& c : chains_) {
      if (rank(c, 0) > r && c.next_release > now_) {
        t = std::min(t, c.next_release);
      }
    }
    return t;
  }
  std::int64_t next_any_release() const {
    std::int64_t t = kNever;
    for (const auto& c : chains_) {
      if (c.next_release > now_) {
        t = std::min(t, c.next_release);
      }
    }
    return t;
  }

  // --- instant processing --------------------------------------------------
  void process_instant() {
    for (auto& c : chains_) {
      if (c.active && !c.missed && c.abs_deadline <= now_ && now_ <= horizon_) {
        c.missed = true;
        emit(EventKind::DeadlineMiss, c);
      }
    }
    bool released = false;
    for (std::size_t i = 0; i < chains_.size(); ++i) {
      auto& c = chains_[i];
      while (c.next_release <= now_ && c.next_release < horizon_) {
        release(i);
        released = true;
      }
    }
    if (released) {
      pending_decision_ = true;
    }
    settle_phases();
  }

  void release(std::size_t i) {
    auto& c = chains_[i];
    auto& m = result_.metrics.chains[i];
    std::string detail;
    if (c.active) {
      ++m.aborted;
      result_.jobs[c.record].outcome = JobOutcome::Aborted;
      detail = "aborted previous job";
      if (running_ == static_cast<int>(i)) {
        running_ = -1;
        locked_ = false;
      }
    }
    c.active = true;
    ++c.seq;
    c.release = c.next_release;
    c.abs_deadline = c.release + c.deadline;
    c.task = 0;
    c.executed = 0;
    c.missed = false;
    c.record = result_.jobs.size();
    result_.jobs.push_back(JobRecord{c.spec->id, c.release, c.abs_deadline, -1, JobOutcome::Pending});
    ++m.released;
    c.next_release += c.period;
    emit(EventKind::Release, c, detail);
  }

  void settle_phases() {
    while (true) {
      if (phase_ == Phase::Checkpointing && now_ >= phase_until_) {
        finish_checkpoint();
      } else if (phase_ == Phase::Standby && now_ >= phase_until_) {
        emit(EventKind::Wake, -1, -1);
        observe_rate();
        start_restore();
      } else if (phase_ == Phase::Restoring && now_ >= phase_until_) {
        phase_ = Phase::Operation;
      } else if (phase_ == Phase::PowerOff && energy_ >= e_on_ - tol_) {
        emit(EventKind::PowerOn, -1, -1);
        observe_rate();
        if (checkpointing_policy()) {
          start_restore();
        } else {
          phase_ = Phase::Operation;
        }
      } else {
        return;
      }
    }
  }

  void start_restore() {
    if (restore_ > 0) {
      emit(EventKind::Restore, -1, -1);
      result_.metrics.restore_time_s += static_cast<double>(restore_) * 1e-6;
      phase_ = Phase::Restoring;
      phase_until_ = now_ + restore_;
    } else {
      emit(EventKind::Restore, -1, -1);
      phase_ = Phase::Operation;
    }
  }

  // --- decisions -----------------------------------------------------------
  int pick_ready(double harvest_w) {
    int best = -1;
    for (std::size_t i = 0; i < chains_.size(); ++i) {
      auto& c = chains_[i];
      if (!c.active) {
        continue;
      }
      if (admission_policy() && !ideal_ && c.atomic[c.task]) {
        bool unservable = false;
        required_voltage(c, harvest_w, &unservable);
        if (unservable) {
          if (!c.unservable[c.task]) {
            c.unservable[c.task] = 1;
            result_.metrics.unservable_tasks.push_back(c.spec->tasks[c.task].id);
            emit(EventKind::ChargeWait, c, "unservable task: threshold exceeds v_max");
          }
          continue;
        }
      }
      if (best < 0 || rank(c, c.task) > rank(chains_[best], chains_[best].task)) {
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  void notify(Action action, int chosen) {
    if (!observer_) {
      return;
    }
    DecisionView view{now_, voltage(), {}, chosen < 0 ? -1 : chains_[chosen].spec->id, action};
    for (const auto& c : chains_) {
      if (c.active) {
        view.ready.push_back(
            ReadyJob{c.spec->id, static_cast<int>(c.task), c.priority, static_cast<bool>(c.atomic[c.task])});
      }
    }
    observer_(view);
  }

  void dispatch(int idx) {
    auto& c = chains_[idx];
    if (running_ != idx) {
      if (running_ >= 0) {
        emit(EventKind::Preempt, chains_[running_]);
      }
      running_ = idx;
      emit(EventKind::Dispatch, c);
    }
    locked_ = !preemptive(c);
  }

  void idle() {
    if (running_ >= 0) {
      emit(EventKind::Preempt, chains_[running_]);
    }
    running_ = -1;
    locked_ = false;
  }

  void decide() {
    pending_decision_ = false;
    ++decisions_;
    const bool boundary = at_boundary() && !ideal_;

    switch (cfg_.policy) {
      case PolicyKind::AtomicRestart:
        if (boundary && energy_ <= e_off_ + tol_) {
          notify(Action::PowerDown, -1);
          power_down(CycleKind::PowerOff, "v_off reached");
          return;
        }
        break;
      case PolicyKind::BestEffortJIT:
        if (boundary && energy_ <= e_min_ + tol_) {
          notify(Action::Checkpoint, -1);
          begin_checkpoint(-1, CycleKind::PowerOff);
          return;
        }
        break;
      default:
        if (boundary && running_ >= 0 && locked_ && energy_ <= tol_) {
          auto& c = chains_[running_];
          ++result_.metrics.admission_violations;
          ++result_.metrics.chains[running_].aborted;
          result_.jobs[c.record].outcome = JobOutcome::Aborted;
          emit(EventKind::PowerOff, c, "admission violated: energy depleted during atomic task");
          c.active = false;
          running_ = -1;
          locked_ = false;
          notify(Action::PowerDown, -1);
          power_down(CycleKind::PowerOff, "");
          return;
        }
        break;
    }

    if (running_ >= 0 && locked_) {
      notify(Action::Continue, running_);
      return;
    }

    const double harvest_w = admission_policy() || checkpointing_policy() ? harvest_estimate() : 0.0;
    const int h = pick_ready(harvest_w);

    if (cfg_.policy == PolicyKind::AtomicRestart || cfg_.policy == PolicyKind::BestEffortJIT) {
      if (h < 0) {
        notify(Action::Idle, -1);
        idle();
      } else {
        notify(Action::Run, h);
        dispatch(h);
      }
      return;
    }

    const bool low = boundary && energy_ <= e_min_ + tol_;
    if (h < 0) {
      if (low) {
        notify(Action::Checkpoint, -1);
        begin_checkpoint(-1, CycleKind::Standby);
      } else {
        notify(Action::Idle, -1);
        idle();
      }
      return;
    }

    auto& c = chains_[h];
    if (ideal_) {
      notify(Action::Run, h);
      dispatch(h);
      return;
    }
    const double v_req = required_voltage(c, harvest_w);
    if (c.atomic[c.task]) {
      if (energy_ >= energy_of_voltage(cfg_.capacitor, v_req) - tol_) {
        notify(Action::Run, h);
        dispatch(h);
      } else {
        notify(Action::ChargeWait, h);
        char buf[96];
        std::snprintf(buf, sizeof buf, "threshold_v=%.6f", v_req);
        idle();
        emit(EventKind::ChargeWait, c, buf);
        begin_checkpoint(h, CycleKind::Standby);
      }
      return;
    }
    if (low && harvest_time_to(v_req, harvest_w) > 0.0) {
      notify(Action::Checkpoint, h);
      idle();
      begin_checkpoint(h, CycleKind::Standby);
      return;
    }
    notify(Action::Run, h);
    dispatch(h);
  }

  // --- power cycling -------------------------------------------------------
  void begin_checkpoint(int target, CycleKind kind) {
    if (running_ >= 0) {
      running_ = -1;
      locked_ = false;
    }
    cycle_target_ = target;
    cycle_kind_ = kind;
    emit(EventKind::Checkpoint, -1, -1, kind == CycleKind::Standby ? "standby" : "power_off");
    result_.metrics.checkpoint_time_s += static_cast<double>(store_) * 1e-6;
    phase_ = Phase::Checkpointing;
    phase_until_ = now_ + store_;
    settle_phases();
  }

  void finish_checkpoint() {
    if (energy_ < e_off_ - tol_) {
      power_down(CycleKind::PowerOff, "checkpoint aborted below v_off");
      return;
    }
    for (auto& c : chains_) {
      if (c.active) {
        c.image_seq = c.seq;
        c.image_task = c.task;
        c.image_executed = c.atomic[c.task] ? 0 : c.executed;
      }
    }
    if (cycle_kind_ == CycleKind::PowerOff) {
      power_down(CycleKind::PowerOff, "");
      return;
    }

    double dt = kInf;
    std::int64_t next_hp = next_any_release();
    if (cycle_target_ >= 0) {
      const auto& c = chains_[cycle_target_];
      const double harvest_w = harvest_estimate();
      dt = standby_time_to(required_voltage(c, harvest_w), harvest_w);
      next_hp = cfg_.policy == PolicyKind::AtomicChargeAware && !std::isinf(dt)
                    ? kNever
                    : next_release_ranked_above(rank(c, c.task));
    }
    double wake_s = std::min(now_s() + dt, next_hp == kNever ? kInf : static_cast<double>(next_hp) * 1e-6);
    std::int64_t wake = std::isinf(wake_s) ? kNever : ceil_tick(ceil_us(wake_s));
    if (wake != kNever && wake <= now_) {
      wake = next_tick_after(now_);
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "wake_at=%.6f;dt=%.6f;next_hp=%.6f",
                  wake == kNever ? kInf : static_cast<double>(wake) * 1e-6, dt,
                  next_hp == kNever ? kInf : static_cast<double>(next_hp) * 1e-6);
    apply_power_loss();
    ++result_.metrics.power_cycles;
    emit(EventKind::EnterStandby, cycle_target_ >= 0 ? chains_[cycle_target_].spec->id : -1,
         cycle_target_ >= 0 ? static_cast<int>(chains_[cycle_target_].task) : -1, buf);
    phase_ = Phase::Standby;
    phase_until_ = wake;
  }

  void power_down(CycleKind, const std::string& why) {
    running_ = -1;
    locked_ = false;
    apply_power_loss();
    ++result_.metrics.power_cycles;
    emit(EventKind::PowerOff, -1, -1, why);
    phase_ = Phase::PowerOff;
  }

  // Volatile progress is lost; non-atomic progress survives through the last image.
  void apply_power_loss() {
    for (auto& c : chains_) {
      if (!c.active) {
        continue;
      }
      const bool restorable = checkpointing_policy() && !c.atomic[c.task] && c.image_seq == c.seq &&
                              c.image_task == c.task;
      c.executed = restorable ? c.image_executed : 0;
    }
  }

  // --- time advance --------------------------------------------------------
  double current_draw() const {
    switch (phase_) {
      case Phase::Operation:
        return running_ >= 0 ? chains_[running_].power[chains_[running_].task] : 0.0;
      case Phase::Checkpointing:
      case Phase::Restoring: return ckpt_power_;
      default: return 0.0;
    }
  }

  double watch_level() const {
    if (running_ < 0) {
      return -1.0;
    }
    switch (cfg_.policy) {
      case PolicyKind::AtomicRestart: return e_off_;
      case PolicyKind::BestEffortJIT: return e_min_;
      default: return locked_ ? 0.0 : e_min_;
    }
  }

  std::int64_t crossing_boundary(double level, double net_w) const {
    if (energy_ > level + tol_) {
      const double t = now_s() + (energy_ - level) / (-net_w);
      const std::int64_t b = ceil_tick(ceil_us(t));
      return b > now_ ? b : next_tick_after(now_);
    }
    return next_tick_after(now_);
  }

  std::int64_t next_event_time() const {
    std::int64_t t = horizon_;
    for (const auto& c : chains_) {
      if (c.next_release > now_) {
        t = std::min(t, c.next_release);
      }
      if (c.active && !c.missed && c.abs_deadline > now_) {
        t = std::min(t, c.abs_deadline);
      }
    }
    if (!ideal_) {
      const double change = cfg_.harvest.next_change_after(now_s());
      if (!std::isinf(change)) {
        t = std::min(t, std::max(ceil_us(change), now_ + 1));
      }
    }
    const double rate = ideal_ ? 0.0 : rate_now();
    switch (phase_) {
      case Phase::Checkpointing:
      case Phase::Restoring:
      case Phase::Standby: t = std::min(t, phase_until_); break;
      case Phase::PowerOff:
        if (rate > 0.0) {
          t = std::min(t, std::max(now_ + ceil_us((e_on_ - energy_) / rate), now_ + 1));
        }
        break;
      case Phase::Operation:
        if (running_ >= 0) {
          const auto& c = chains_[running_];
          t = std::min(t, now_ + c.wcet[c.task] - c.executed);
          const double net = rate - c.power[c.task];
          if (!ideal_ && net < 0.0) {
            t = std::min(t, crossing_boundary(watch_level(), net));
          }
        }
        break;
    }
    return std::max(t, now_ + 1);
  }

  void advance(std::int64_t to) {
    const double dt = static_cast<double>(to - now_) * 1e-6;
    const double draw = current_draw();
    auto& m = result_.metrics;
    if (ideal_) {
      m.harvested_j += draw * dt;
    } else {
      const double harvested = cfg_.harvest.rate_at(now_s()) * dt;
      m.harvested_j += harvested;
      double e = energy_ + harvested - draw * dt;
      if (e > e_max_) {
        m.clamped_j += e - e_max_;
        e = e_max_;
      } else if (e < 0.0) {
        m.shortfall_j += -e;
        e = 0.0;
      }
      energy_ = e;
    }
    if (phase_ == Phase::Operation && running_ >= 0) {
      m.task_energy_j += draw * dt;
    } else if (phase_ == Phase::Checkpointing || phase_ == Phase::Restoring) {
      m.overhead_energy_j += draw * dt;
    }
    if (phase_ == Phase::Operation || phase_ == Phase::Checkpointing || phase_ == Phase::Restoring) {
      m.uptime_s += dt;
    }
    const std::int64_t before = now_;
    now_ = to;
    if (!ideal_ && cfg_.harvest.next_change_after(static_cast<double>(before) * 1e-6) <= now_s() &&
        phase_ != Phase::Standby && phase_ != Phase::PowerOff) {
      observe_rate();
    }
    if (phase_ == Phase::Operation && running_ >= 0) {
      auto& c = chains_[running_];
      c.executed += to - before;
      if (c.executed >= c.wcet[c.task]) {
        complete(running_);
      }
    }
  }

  void complete(int idx) {
    auto& c = chains_[idx];
    emit(EventKind::Complete, c);
    running_ = -1;
    locked_ = false;
    pending_decision_ = true;
    if (c.task + 1 < c.wcet.size()) {
      ++c.task;
      c.executed = 0;
      return;
    }
    c.active = false;
    auto& rec = result_.jobs[c.record];
    rec.finish_us = now_;
    auto& m = result_.metrics.chains[idx];
    if (now_ <= c.abs_deadline) {
      rec.outcome = JobOutcome::CompletedOnTime;
      ++m.completed_by_deadline;
    } else {
      rec.outcome = JobOutcome::CompletedLate;
      ++m.completed_late;
    }
  }

  void finish() {
    for (std::size_t i = 0; i < chains_.size(); ++i) {
      auto& c = chains_[i];
      if (c.active && c.abs_deadline > horizon_) {
        --result_.metrics.chains[i].released;
      }
    }
    result_.metrics.final_energy_j = energy_;
    result_.metrics.scheduler_time_s = 0.0;
  }

  SimConfig cfg_;
  ChargeEstimator estimator_;
  const DecisionObserver& observer_;
  std::vector<ChainRt> chains_;
  SimResult result_;

  std::int64_t tick_ = 1000;
  std::int64_t horizon_ = 0;
  std::int64_t now_ = 0;
  bool ideal_ = false;
  double e_min_ = 0, e_off_ = 0, e_on_ = 0, e_max_ = 0, tol_ = 0;
  double energy_ = 0;
  double ckpt_power_ = 0;
  std::int64_t store_ = 0;
  std::int64_t restore_ = 0;

  Phase phase_ = Phase::Operation;
  std::int64_t phase_until_ = 0;
  int running_ = -1;
  bool locked_ = false;
  bool pending_decision_ = false;
  int cycle_target_ = -1;
  CycleKind cycle_kind_ = CycleKind::Standby;
  std::int64_t decisions_ = 0;
};

}  // namespace

SimResult run(const Taskset& ts, const SimConfig& cfg, ChargeEstimator estimator,
              const DecisionObserver& observer) {
  if (auto v = validate(ts); !v.empty()) {
    throw DomainError("invalid taskset: chain " + std::to_string(v.front().chain_id) + ": " +
                      v.front().message);
  }
  return Engine(ts, cfg, std::move(estimator), observer).run();
}

SimResult run(const Taskset& ts, const SimConfig& cfg, const DecisionObserver& observer) {
  const double prior =
      cfg.estimator_prior_w.value_or(cfg.harvest.mode() == HarvestMode::Ideal ? 0.0 : cfg.harvest.rate_at(0.0));
  return run(ts, cfg, ChargeEstimator(cfg.estimator_window_s, prior), observer);
}

}  // namespace ipd
