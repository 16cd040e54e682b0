// Acceptance checks: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hand_examples.hpp"
#include "ipd/analysis.hpp"
#include "ipd/experiment.hpp"
#include "ipd/sim.hpp"
#include "ipd/workload.hpp"
#include "rta_oracle.hpp"

using namespace ipd;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass;
  std::string detail;
};

int failures = 0;

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// A criterion fails when it overruns its time budget.
void report(int id, const std::string& title, double budget_s, const std::function<Verdict()>& body) {
  const auto t0 = Clock::now();
  Verdict v{false, ""};
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (secs > budget_s) {
    v.pass = false;
    v.detail += fmt(" [over budget of %.0f s]", budget_s);
  }
  std::printf("%s criterion %d: %s | %s | %.3f s\n", v.pass ? "PASS" : "FAIL", id, title.c_str(),
              v.detail.c_str(), secs);
  std::fflush(stdout);
  failures += !v.pass;
}

template <typename F>
double time_of(F&& f) {
  const auto t0 = Clock::now();
  f();
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

SimConfig sim_config(PolicyKind p, HarvestProfile h, double cap_f) {
  SimConfig cfg;
  cfg.policy = p;
  cfg.harvest = std::move(h);
  cfg.capacitor.capacitance_f = cap_f;
  cfg.horizon_s = 480.0;
  cfg.record_trace = false;
  return cfg;
}

// Priority of the highest chain with at least one miss, or -1.
int highest_missing_priority(const SimMetrics& m, int top_k_floor) {
  int best = -1;
  for (const auto& c : m.chains) {
    if (c.missed() > 0 && c.priority >= top_k_floor) best = std::max(best, c.priority);
  }
  return best;
}

int top_priority(const Taskset& ts) {
  int p = std::numeric_limits<int>::min();
  for (const auto& c : ts.chains) p = std::max(p, c.priority);
  return p;
}

std::string ratios(const SimMetrics& m) {
  std::string s;
  for (const auto& c : m.chains) {
    s += fmt("%s%lld/%lld", s.empty() ? "" : " ", static_cast<long long>(c.completed_by_deadline),
             static_cast<long long>(c.released));
  }
  return s;
}

}  // namespace

int main() {
  const Taskset table2 = table2_taskset();

  report(1, "minimum capacitor for the reference taskset", 1.0, [&] {
    double c = 0.0;
    const double secs = time_of([&] { c = min_capacitor(table2, 5.8, 3.0); });
    const bool ok = std::abs(c - 0.0305) / 0.0305 <= 0.02 && std::abs(c - 0.030) / 0.030 <= 0.02 && secs < 1e-3;
    return Verdict{ok, fmt("C_min = %.5f F (target 0.0305, published 0.030, tol 2%%), %.1f us", c, secs * 1e6)};
  });

  report(2, "charging utilization with raw demand", 1.0, [&] {
    double u15 = 0.0, u8 = 0.0;
    const double secs = time_of([&] {
      u15 = charging_utilization(table2, 0.015, false);
      u8 = charging_utilization(table2, 0.008, false);
    });
    const bool ok = std::abs(u15 - 0.979) <= 0.01 && std::abs(u8 - 1.836) <= 0.02 && secs < 1e-3;
    return Verdict{ok, fmt("U(15 mW) = %.4f (0.979 +/- 0.01), U(8 mW) = %.4f (1.836 +/- 0.02), %.1f us", u15, u8,
                           secs * 1e6)};
  });

  report(3, "analytical verdicts for the reference taskset", 1.0, [&] {
    AnalysisOptions raw;
    raw.demand = DemandConvention::Raw;
    bool s15 = false, s8 = true, c15 = false, c8 = false;
    const double secs = time_of([&] {
      s15 = analyze(table2, 0.015, raw).schedulable;
      s8 = analyze(table2, 0.008, raw).schedulable;
      c15 = analyze(table2, 0.015).schedulable;
      c8 = analyze(table2, 0.008).schedulable;
    });
    const bool ok = s15 && !s8 && secs < 1.0;
    return Verdict{ok, fmt("raw demand: 15 mW %s, 8 mW %s; clamped demand: 15 mW %s, 8 mW %s",
                           s15 ? "schedulable" : "unschedulable", s8 ? "schedulable" : "unschedulable",
                           c15 ? "schedulable" : "unschedulable", c8 ? "schedulable" : "unschedulable")};
  });

  report(4, "ideal harvesting, 100 mF, 480 s", 25.0, [&] {
    bool ok = true;
    std::string detail;
    const int top3 = top_priority(table2) - 2;
    for (auto p : all_policies()) {
      SimMetrics m;
      const double secs = time_of([&] { m = run(table2, sim_config(p, HarvestProfile::ideal(), 0.1)).metrics; });
      ok &= secs < 5.0;
      bool all_ok = true;
      for (const auto& c : m.chains) all_ok &= c.success_ratio() == 1.0;
      if (p == PolicyKind::MixedPreemption || p == PolicyKind::BestEffortJIT) ok &= all_ok;
      if (p == PolicyKind::AtomicRestart || p == PolicyKind::AtomicChargeAware)
        ok &= highest_missing_priority(m, top3) >= top3;
      detail += fmt("%s[%s] ", to_string(p).c_str(), ratios(m).c_str());
    }
    return Verdict{ok, detail};
  });

  report(5, "scarce harvesting (8 mW, 100 mF): misses confined below fully served chains", 5.0, [&] {
    const auto m = run(table2, sim_config(PolicyKind::MixedPreemption, HarvestProfile::constant(0.008), 0.1)).metrics;
    int lowest_full = std::numeric_limits<int>::max();
    int highest_miss = std::numeric_limits<int>::min();
    for (const auto& c : m.chains) {
      if (c.success_ratio() == 1.0) lowest_full = std::min(lowest_full, c.priority);
      if (c.missed() > 0) highest_miss = std::max(highest_miss, c.priority);
    }
    const auto* crc = m.find(1);
    const auto* top = &m.chains.front();
    for (const auto& c : m.chains)
      if (c.priority > top->priority) top = &c;
    const bool ok = crc->missed() == 0 && top->success_ratio() == 1.0 && highest_miss < lowest_full;
    return Verdict{ok, fmt("per chain %s; highest missing priority %d < lowest fully served %d", ratios(m).c_str(),
                           highest_miss, lowest_full)};
  });

  report(6, "minimum capacitor (30 mF) at 8 mW", 30.0, [&] {
    bool ok = true;
    std::string detail;
    const int top = top_priority(table2);
    for (auto p : all_policies()) {
      const auto m = run(table2, sim_config(p, HarvestProfile::constant(0.008), 0.03)).metrics;
      const auto* first = &m.chains.front();
      for (const auto& c : m.chains)
        if (c.priority == top) first = &c;
      if (p == PolicyKind::MixedPreemption) {
        ok &= first->success_ratio() == 1.0;
      } else {
        ok &= highest_missing_priority(m, top - 2) >= top - 2;
      }
      detail += fmt("%s[%s] ", to_string(p).c_str(), ratios(m).c_str());
    }
    return Verdict{ok, detail};
  });

  report(7, "analysis soundness against mixed-preemption simulation", 300.0, [&] {
    constexpr double kUnit = 1e-3;  // generator power units are milliwatts
    constexpr double kHorizonCapS = 1e7;
    GenConfig g;
    g.n_min = 3;
    g.n_max = 8;
    g.utilization = {0.1, 0.9};
    g.period_s = {1.0, 60.0};
    g.low_power = {1.0, 10.0};
    g.high_power = {1.0, 10.0};
    g.low_demand_ratio = 1.0;
    g.atomic_probability = 0.5;
    int generated = 0, schedulable = 0, counterexamples = 0, capped = 0;
    std::int64_t jobs = 0;
    std::string first_bad;
    for (std::uint64_t seed = 0; generated < 2000 && schedulable < 500; ++seed) {
      Rng rng(seed);
      Taskset ts = generate_taskset(g, rng);
      ++generated;
      for (auto& c : ts.chains)
        for (auto& t : c.tasks) t.power_w *= kUnit;
      const double ws = 3.0 * kUnit;
      if (!analyze(ts, ws).schedulable) continue;
      ++schedulable;
      SimConfig cfg;
      cfg.policy = PolicyKind::MixedPreemption;
      cfg.harvest = HarvestProfile::constant(ws);
      cfg.checkpoint_store_s = 0.0;
      cfg.checkpoint_restore_s = 0.0;
      cfg.record_trace = false;
      double need_j = 0.0;
      for (const auto& c : ts.chains)
        for (const auto& t : c.tasks) need_j = std::max(need_j, std::max(charging_demand(t.wcet_s, t.power_w, ws), 0.0) * ws);
      const auto& cap = cfg.capacitor;
      cfg.capacitor.capacitance_f = std::max(0.1, 2.0 * need_j / (0.5 * (cap.v_max * cap.v_max - cap.v_min * cap.v_min)));
      cfg.initial_voltage_v = cap.v_min;
      const double hyper = static_cast<double>(hyperperiod_ms(ts)) / 1000.0;
      cfg.horizon_s = std::min(hyper, kHorizonCapS);
      capped += hyper > kHorizonCapS;
      const auto m = run(ts, cfg).metrics;
      std::int64_t misses = 0;
      for (const auto& c : m.chains) {
        misses += c.missed();
        jobs += c.released;
      }
      if (misses > 0) {
        ++counterexamples;
        if (first_bad.empty()) first_bad = fmt(" first at seed %llu", static_cast<unsigned long long>(seed));
      }
    }
    const bool ok = schedulable >= 500 && counterexamples == 0;
    return Verdict{ok, fmt("%d tasksets declared schedulable out of %d generated, %d simulated counterexamples%s "
                           "over %lld jobs (%d horizons capped at %.0f s)",
                           schedulable, generated, counterexamples, first_bad.c_str(), static_cast<long long>(jobs),
                           capped, kHorizonCapS)};
  });

  report(8, "schedulability vs low-demand ratio, mixed preemption vs all-atomic", 600.0, [&] {
    auto spec = experiment_preset("demand_ratio");
    spec.repetitions = 1000;
    const auto r = run_experiment(spec);
    bool dominates = true;
    double peak = 0.0;
    std::string curve;
    for (std::size_t p = 0; p < spec.grid.size(); ++p) {
      const auto& mixed = r.sched[2 * p];
      const auto& atomic = r.sched[2 * p + 1];
      const double gap = 100.0 * (mixed.ratio() - atomic.ratio());
      dominates &= mixed.ratio() >= atomic.ratio();
      peak = std::max(peak, gap);
      curve += fmt("%s%.1f:%.3f/%.3f", curve.empty() ? "" : " ", spec.grid[p], mixed.ratio(), atomic.ratio());
    }
    const bool ok = dominates && peak >= 10.0 && peak <= 30.0;
    return Verdict{ok, fmt("peak advantage %.1f pp (bracket [10, 30]); dominates at every point: %s; %s", peak,
                           dominates ? "yes" : "no", curve.c_str())};
  });

  report(9, "hand-computed fixed points match closed form and brute force", 60.0, [&] {
    bool ok = true;
    std::string detail;
    for (const auto& ex : hand::examples()) {
      const AnalysisContext ctx(ex.chains);
      const auto i = ctx.index_of(ex.chain_id);
      const auto s = start_time(ctx, i, 1);
      const auto f = finish_time(ctx, i, s.value_ms);
      const auto r = wcrt(ctx, i);
      const auto brute = oracle::brute_wcrt(ex.chains, i, 10000);
      const bool match = blocking(ctx, i) == ex.blocking && active_period(ctx, i).value_ms == ex.active_period &&
                         s.value_ms == ex.start && f.value_ms == ex.finish && r.wcrt_ms == ex.wcrt &&
                         brute.wcrt_ms == ex.wcrt;
      ok &= match;
      detail += fmt("%sR=%lld/%lld", detail.empty() ? "" : " ", static_cast<long long>(r.wcrt_ms),
                    static_cast<long long>(brute.wcrt_ms));
    }
    return Verdict{ok, "analysis/brute-force " + detail};
  });

  report(10, "checkpoint overhead in the moderate scenario (15 mW, 100 mF)", 5.0, [&] {
    const auto m = run(table2, sim_config(PolicyKind::MixedPreemption, HarvestProfile::constant(0.015), 0.1)).metrics;
    const double share = m.uptime_s > 0.0 ? 100.0 * m.checkpoint_time_s / m.uptime_s : 0.0;
    const auto s = run(table2, sim_config(PolicyKind::MixedPreemption, HarvestProfile::constant(0.008), 0.1)).metrics;
    const double scarce = s.uptime_s > 0.0 ? 100.0 * s.checkpoint_time_s / s.uptime_s : 0.0;
    const bool ok = share < 0.5;
    return Verdict{ok, fmt("checkpoint/uptime = %.4f%% over %lld power cycles (bound 0.5%%, published 0.088%%); "
                           "8 mW for reference: %.4f%% over %lld cycles",
                           share, static_cast<long long>(m.power_cycles), scarce,
                           static_cast<long long>(s.power_cycles))};
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
