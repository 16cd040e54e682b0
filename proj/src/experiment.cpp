#include "ipd/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace ipd {

using nlohmann::json;

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::PolicyCompare: return "policy_compare";
    case ExperimentKind::CapacitorSweep: return "capacitor_sweep";
    case ExperimentKind::SchedVsDemandRatio: return "sched_vs_demand_ratio";
    case ExperimentKind::SchedVsUtilization: return "sched_vs_utilization";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (auto k : {ExperimentKind::PolicyCompare, ExperimentKind::CapacitorSweep,
                 ExperimentKind::SchedVsDemandRatio, ExperimentKind::SchedVsUtilization}) {
    if (to_string(k) == name) {
      return k;
    }
  }
  throw std::invalid_argument("unknown experiment kind '" + name + "'");
}

std::string ExperimentSpec::violation() const {
  if (policies.empty()) return "at least one policy is required";
  if (simulated()) {
    if (harvests.empty()) return "at least one harvest setting is required";
    if (capacitances_f.empty()) return "at least one capacitance is required";
    for (double c : capacitances_f) {
      if (!(c > 0.0)) return "capacitances must be positive";
    }
    return {};
  }
  if (repetitions < 1) return "repetitions must be at least 1";
  if (grid.empty()) return "the sweep needs at least one grid point";
  if (!(harvest_w > 0.0)) return "harvest_w must be positive";
  for (auto p : policies) {
    if (p != PolicyKind::MixedPreemption && p != PolicyKind::AtomicChargeAware) {
      return "no schedulability analysis for policy " + to_string(p);
    }
  }
  for (double g : grid) {
    if (kind == ExperimentKind::SchedVsDemandRatio && !(g >= 0.0 && g <= 1.0))
      return "low-demand ratios must lie in [0, 1]";
    if (kind == ExperimentKind::SchedVsUtilization && !(g > 0.0)) return "utilizations must be positive";
  }
  return {};
}

std::uint64_t repetition_seed(std::uint64_t seed, std::size_t point, int reps, int rep) {
  return seed ^ (static_cast<std::uint64_t>(point) * static_cast<std::uint64_t>(reps) +
                 static_cast<std::uint64_t>(rep));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

GenConfig point_generator(const ExperimentSpec& spec, double parameter) {
  GenConfig g = spec.generator;
  if (spec.kind == ExperimentKind::SchedVsDemandRatio) {
    g.low_demand_ratio = parameter;
  } else {
    g.utilization = {parameter, parameter};
  }
  return g;
}

void run_sim(const ExperimentSpec& spec, ExperimentResult& out) {
  const Taskset ts = spec.taskset_path.empty() ? table2_taskset() : load_taskset(spec.taskset_path);
  for (std::size_t h = 0; h < spec.harvests.size(); ++h) {
    for (std::size_t c = 0; c < spec.capacitances_f.size(); ++c) {
      for (auto p : spec.policies) {
        SimRecord r;
        r.point = h * spec.capacitances_f.size() + c;
        r.harvest = spec.harvests[h].label;
        r.capacitance_f = spec.capacitances_f[c];
        r.policy = p;
        r.seed = spec.seed;
        out.sim.push_back(std::move(r));
      }
    }
  }
  parallel_for(out.sim.size(), spec.threads, [&](std::size_t i) {
    auto& r = out.sim[i];
    const auto t0 = Clock::now();
    SimConfig cfg = spec.sim;
    cfg.record_trace = false;
    cfg.policy = r.policy;
    cfg.capacitor.capacitance_f = r.capacitance_f;
    cfg.harvest = spec.harvests[r.point / spec.capacitances_f.size()].profile;
    try {
      r.metrics = run(ts, cfg).metrics;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    r.wall_s = seconds_since(t0);
  });
}

void run_sched(const ExperimentSpec& spec, ExperimentResult& out) {
  struct Cell {
    std::vector<char> ok;
    std::vector<char> failed;
    double wall_s = 0.0;
  };
  std::vector<Cell> cells(spec.grid.size());
  for (auto& c : cells) {
    c.ok.assign(static_cast<std::size_t>(spec.repetitions) * spec.policies.size(), 0);
    c.failed.assign(c.ok.size(), 0);
  }
  const std::size_t per_point = static_cast<std::size_t>(spec.repetitions);
  parallel_for(spec.grid.size() * per_point, spec.threads, [&](std::size_t job) {
    const std::size_t point = job / per_point;
    const int rep = static_cast<int>(job % per_point);
    auto& cell = cells[point];
    try {
      Rng rng(repetition_seed(spec.seed, point, spec.repetitions, rep));
      const Taskset ts = generate_taskset(point_generator(spec, spec.grid[point]), rng);
      for (std::size_t p = 0; p < spec.policies.size(); ++p) {
        AnalysisOptions opts;
        opts.force_atomic = spec.policies[p] == PolicyKind::AtomicChargeAware;
        cell.ok[p * per_point + rep] = analyze(ts, spec.harvest_w, opts).schedulable;
      }
    } catch (const std::exception&) {
      for (std::size_t p = 0; p < spec.policies.size(); ++p) cell.failed[p * per_point + rep] = 1;
    }
  });
  for (std::size_t point = 0; point < spec.grid.size(); ++point) {
    for (std::size_t p = 0; p < spec.policies.size(); ++p) {
      SchedRecord r;
      r.point = point;
      r.parameter = spec.grid[point];
      r.policy = spec.policies[p];
      r.repetitions = spec.repetitions;
      r.seed = spec.seed;
      for (std::size_t rep = 0; rep < per_point; ++rep) {
        r.schedulable += cells[point].ok[p * per_point + rep];
        r.failures += cells[point].failed[p * per_point + rep];
      }
      out.sched.push_back(r);
    }
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  if (auto v = spec.violation(); !v.empty()) {
    throw DomainError("experiment '" + spec.id + "': " + v);
  }
  ExperimentResult out;
  const auto t0 = Clock::now();
  if (spec.simulated()) {
    run_sim(spec, out);
  } else {
    run_sched(spec, out);
    const double wall = seconds_since(t0) / std::max<std::size_t>(out.sched.size(), 1);
    for (auto& r : out.sched) r.wall_s = wall;
  }
  return out;
}

std::string sim_records_csv(const ExperimentSpec& spec, const std::vector<SimRecord>& records) {
  std::ostringstream out;
  out << "experiment,point,harvest,capacitance_f,policy,chain,priority,released,completed_by_deadline,"
         "completed_late,aborted,success_ratio,power_cycles,checkpoint_time_s,uptime_s,seed,status\n";
  char buf[512];
  for (const auto& r : records) {
    if (!r.error.empty()) {
      std::snprintf(buf, sizeof buf, "%s,%zu,%s,%.4f,%s,,,,,,,,,,,%llu,\"error: %s\"\n", spec.id.c_str(),
                    r.point, r.harvest.c_str(), r.capacitance_f, to_string(r.policy).c_str(),
                    static_cast<unsigned long long>(r.seed), r.error.c_str());
      out << buf;
      continue;
    }
    for (const auto& c : r.metrics.chains) {
      std::snprintf(buf, sizeof buf, "%s,%zu,%s,%.4f,%s,%d,%d,%lld,%lld,%lld,%lld,%.6f,%lld,%.6f,%.6f,%llu,ok\n",
                    spec.id.c_str(), r.point, r.harvest.c_str(), r.capacitance_f,
                    to_string(r.policy).c_str(), c.chain_id, c.priority, static_cast<long long>(c.released),
                    static_cast<long long>(c.completed_by_deadline), static_cast<long long>(c.completed_late),
                    static_cast<long long>(c.aborted), c.success_ratio(),
                    static_cast<long long>(r.metrics.power_cycles), r.metrics.checkpoint_time_s,
                    r.metrics.uptime_s, static_cast<unsigned long long>(r.seed));
      out << buf;
    }
  }
  return out.str();
}

std::string sched_records_csv(const ExperimentSpec& spec, const std::vector<SchedRecord>& records) {
  std::ostringstream out;
  out << "experiment,point," << (spec.kind == ExperimentKind::SchedVsDemandRatio ? "low_demand_ratio" : "utilization")
      << ",policy,repetitions,schedulable,failures,ratio,seed\n";
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%.3f,%s,%d,%d,%d,%.6f,%llu\n", spec.id.c_str(), r.point,
                  r.parameter, to_string(r.policy).c_str(), r.repetitions, r.schedulable, r.failures,
                  r.ratio(), static_cast<unsigned long long>(r.seed));
    out << buf;
  }
  return out.str();
}

std::string timing_csv(const ExperimentSpec& spec, const ExperimentResult& result) {
  std::ostringstream out;
  out << "experiment,point,policy,wall_s\n";
  char buf[256];
  for (const auto& r : result.sim) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%s,%.6f\n", spec.id.c_str(), r.point, to_string(r.policy).c_str(),
                  r.wall_s);
    out << buf;
  }
  for (const auto& r : result.sched) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%s,%.6f\n", spec.id.c_str(), r.point, to_string(r.policy).c_str(),
                  r.wall_s);
    out << buf;
  }
  return out.str();
}

std::vector<std::string> write_experiment(const ExperimentSpec& spec, const ExperimentResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(spec.out_dir);
  const fs::path main = fs::path(spec.out_dir) / (spec.id + ".csv");
  const fs::path timing = fs::path(spec.out_dir) / (spec.id + "_timing.csv");
  auto write = [](const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    if (!f) {
      throw std::ios_base::failure("cannot write " + p.string());
    }
    f << text;
  };
  write(main, spec.simulated() ? sim_records_csv(spec, result.sim) : sched_records_csv(spec, result.sched));
  write(timing, timing_csv(spec, result));
  return {main.string(), timing.string()};
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"harvest_modes", "capacitors", "demand_ratio", "utilization", "smoke"};
  return names;
}

ExperimentSpec experiment_preset(const std::string& name) {
  ExperimentSpec s;
  s.id = name;
  if (name == "harvest_modes" || name == "capacitors" || name == "smoke") {
    s.policies = all_policies();
    s.sim.horizon_s = 480.0;
    if (name == "capacitors") {
      s.kind = ExperimentKind::CapacitorSweep;
      s.harvests = {{"8mW", HarvestProfile::constant(0.008)}};
      s.capacitances_f = {0.03, 0.1, 0.47};
    } else {
      s.kind = ExperimentKind::PolicyCompare;
      s.harvests = {{"ideal", HarvestProfile::ideal()},
                    {"15mW", HarvestProfile::constant(0.015)},
                    {"8mW", HarvestProfile::constant(0.008)}};
      s.capacitances_f = {0.1};
    }
    if (name == "smoke") {
      s.harvests.resize(1);
      s.sim.horizon_s = 60.0;
    }
    return s;
  }
  if (name == "demand_ratio" || name == "utilization") {
    s.policies = {PolicyKind::MixedPreemption, PolicyKind::AtomicChargeAware};
    s.harvest_w = 3.0;
    s.repetitions = 1000;
    s.generator.period_s = {1.0, 60.0};
    s.generator.atomic_probability = 0.5;
    if (name == "demand_ratio") {
      s.kind = ExperimentKind::SchedVsDemandRatio;
      s.generator.n_min = s.generator.n_max = 5;
      s.generator.utilization = {0.1, 0.9};
      s.generator.low_power = {1.0, 3.0};
      s.generator.high_power = {8.0, 10.0};
      for (int i = 0; i <= 10; ++i) s.grid.push_back(i / 10.0);
    } else {
      s.kind = ExperimentKind::SchedVsUtilization;
      s.generator.n_min = 3;
      s.generator.n_max = 8;
      s.generator.low_power = {1.0, 10.0};
      s.generator.high_power = {1.0, 10.0};
      s.generator.low_demand_ratio = 1.0;
      for (int i = 1; i <= 9; ++i) s.grid.push_back(i / 10.0);
    }
    return s;
  }
  throw std::invalid_argument("unknown experiment preset '" + name + "'");
}

ExperimentSpec experiment_spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("experiment spec: ") + e.what());
  }
  try {
    ExperimentSpec s;
    if (j.contains("preset")) {
      s = experiment_preset(j.at("preset").get<std::string>());
    }
    if (j.contains("kind")) s.kind = experiment_kind_from_string(j.at("kind").get<std::string>());
    s.id = j.value("id", s.id);
    if (j.contains("policies")) {
      s.policies.clear();
      for (const auto& p : j.at("policies")) s.policies.push_back(policy_from_string(p.get<std::string>()));
    }
    if (j.contains("sim")) s.sim = sim_config_from_json(j.at("sim").dump());
    if (j.contains("harvest")) {
      s.harvests.clear();
      for (const auto& h : j.at("harvest")) {
        HarvestSetting hs;
        hs.profile = sim_config_from_json(json{{"harvest", h}}.dump()).harvest;
        if (h.contains("label")) {
          hs.label = h.at("label").get<std::string>();
        } else if (hs.profile.mode() == HarvestMode::Constant) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%gmW", hs.profile.rate_at(0.0) * 1000.0);
          hs.label = buf;
        } else {
          hs.label = hs.profile.mode() == HarvestMode::Ideal ? "ideal" : "trace";
        }
        s.harvests.push_back(std::move(hs));
      }
    }
    if (j.contains("capacitance_f")) s.capacitances_f = j.at("capacitance_f").get<std::vector<double>>();
    s.taskset_path = j.value("taskset", s.taskset_path);
    if (j.contains("horizon_s")) s.sim.horizon_s = j.at("horizon_s").get<double>();
    if (j.contains("generator")) s.generator = gen_config_from_json(j.at("generator").dump());
    if (j.contains("grid")) s.grid = j.at("grid").get<std::vector<double>>();
    s.harvest_w = j.value("harvest_w", s.harvest_w);
    s.repetitions = j.value("repetitions", s.repetitions);
    s.seed = j.value("seed", s.seed);
    s.out_dir = j.value("out_dir", s.out_dir);
    s.threads = j.value("threads", s.threads);
    return s;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("experiment spec schema: ") + e.what());
  }
}

}  // namespace ipd
