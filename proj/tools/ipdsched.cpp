// Command-line front end: generate, simulate, analyze, experiment.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ipd/analysis.hpp"
#include "ipd/experiment.hpp"
#include "ipd/sim.hpp"
#include "ipd/workload.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kDomain = 1;
constexpr int kUsage = 2;

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw std::ios_base::failure("cannot write " + path.string());
  }
  out << text;
}

// 0.979, 1.836, 0
std::string short_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s == "-0" ? "0" : s;
}

ipd::Taskset checked_taskset(const std::string& path) {
  auto ts = ipd::load_taskset(path);
  if (auto v = ipd::validate(ts); !v.empty()) {
    throw ipd::DomainError("invalid taskset: chain " + std::to_string(v.front().chain_id) + ": " +
                           v.front().message);
  }
  return ts;
}

struct GenerateArgs {
  std::string config;
  int count = 1;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

int cmd_generate(const GenerateArgs& a) {
  auto cfg = ipd::gen_config_from_json(ipd::read_text_file(a.config));
  if (a.seed) cfg.seed = *a.seed;
  if (auto v = cfg.violation(); !v.empty()) {
    throw ipd::DomainError("generator config: " + v);
  }
  for (int i = 0; i < a.count; ++i) {
    ipd::Rng rng(ipd::repetition_seed(cfg.seed, 0, a.count, i));
    const auto ts = ipd::generate_taskset(cfg, rng);
    char name[64];
    std::snprintf(name, sizeof name, "taskset_%04d.json", i);
    const fs::path path = fs::path(a.out) / name;
    write_file(path, ipd::taskset_to_json(ts));
    std::cout << path.string() << '\n';
  }
  return kOk;
}

struct SimulateArgs {
  std::string taskset;
  std::string config;
  std::string policy;
  std::optional<double> horizon_s;
  std::string out = ".";
};

int cmd_simulate(const SimulateArgs& a) {
  const auto ts = checked_taskset(a.taskset);
  ipd::SimConfig cfg = a.config.empty() ? ipd::SimConfig{} : ipd::sim_config_from_json(ipd::read_text_file(a.config));
  if (!a.policy.empty()) cfg.policy = ipd::policy_from_string(a.policy);
  if (a.horizon_s) cfg.horizon_s = *a.horizon_s;
  const auto result = ipd::run(ts, cfg);
  const fs::path trace = fs::path(a.out) / "trace.csv";
  const fs::path metrics = fs::path(a.out) / "metrics.csv";
  write_file(trace, ipd::trace_csv(result.trace));
  write_file(metrics, ipd::metrics_csv(result.metrics));
  for (int id : result.metrics.unservable_tasks) {
    std::cerr << "warning: task " << id << " is unservable (threshold above v_max)\n";
  }
  std::cout << "success_ratio " << short_number(result.metrics.success_ratio()) << '\n';
  std::cout << metrics.string() << '\n';
  return kOk;
}

struct AnalyzeArgs {
  std::string taskset;
  double harvest_w = 0.0;
  bool raw = false;
  bool force_atomic = false;
  std::string out;
};

int cmd_analyze(const AnalyzeArgs& a) {
  const auto ts = checked_taskset(a.taskset);
  const double u = ipd::charging_utilization(ts, a.harvest_w, !a.raw);
  if (ts.empty()) {
    std::cout << "utilization " << short_number(u) << ", schedulable true\n";
    if (!a.out.empty()) write_file(a.out, ipd::analysis_csv({}));
    return kOk;
  }
  ipd::AnalysisOptions opts;
  opts.demand = a.raw ? ipd::DemandConvention::Raw : ipd::DemandConvention::Clamped;
  opts.force_atomic = a.force_atomic;
  const auto report = ipd::analyze(ts, a.harvest_w, opts);
  const std::string csv = ipd::analysis_csv(report);
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    write_file(a.out, csv);
  }
  std::cout << "utilization " << short_number(u) << ", schedulable " << (report.schedulable ? "true" : "false")
            << '\n';
  return kOk;
}

struct ExperimentArgs {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> repetitions;
  std::optional<int> threads;
  std::string out;
};

int cmd_experiment(const ExperimentArgs& a) {
  if (a.config.empty() == a.preset.empty()) {
    throw CLI::ValidationError("experiment", "exactly one of --config or --preset is required");
  }
  auto spec = a.config.empty() ? ipd::experiment_preset(a.preset)
                               : ipd::experiment_spec_from_json(ipd::read_text_file(a.config));
  if (a.seed) spec.seed = *a.seed;
  if (a.repetitions) spec.repetitions = *a.repetitions;
  if (a.threads) spec.threads = *a.threads;
  if (!a.out.empty()) spec.out_dir = a.out;
  const auto result = ipd::run_experiment(spec);
  for (const auto& path : ipd::write_experiment(spec, result)) {
    std::cout << path << '\n';
  }
  int failures = 0;
  for (const auto& r : result.sim) failures += !r.error.empty();
  for (const auto& r : result.sched) failures += r.failures;
  if (failures > 0) {
    std::cerr << failures << " grid entries failed; see the status column\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Charge-aware mixed-preemption scheduling toolkit"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate random tasksets");
  g->add_option("--config", gen.config, "Generator config (JSON)")->required();
  g->add_option("--count", gen.count, "Number of tasksets")->check(CLI::PositiveNumber);
  g->add_option("--seed", gen.seed, "Override the config seed");
  g->add_option("--out", gen.out, "Output directory");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate a taskset");
  s->add_option("taskset", sim.taskset, "Taskset file (JSON)")->required();
  s->add_option("--config", sim.config, "Simulation config (JSON)");
  s->add_option("--policy", sim.policy, "Override the scheduling policy");
  s->add_option("--horizon-s", sim.horizon_s, "Override the horizon");
  s->add_option("--out", sim.out, "Output directory for trace.csv and metrics.csv");

  AnalyzeArgs an;
  auto* z = app.add_subcommand("analyze", "Response-time analysis");
  z->add_option("taskset", an.taskset, "Taskset file (JSON)")->required();
  z->add_option("--harvest-w", an.harvest_w, "Constant harvesting power (W)")->required();
  z->add_flag("--raw", an.raw, "Keep negative per-task charging demand");
  z->add_flag("--all-atomic", an.force_atomic, "Treat every task as non-preemptible");
  z->add_option("--out", an.out, "Write the analysis CSV here instead of stdout");

  ExperimentArgs ex;
  auto* e = app.add_subcommand("experiment", "Run an experiment spec or preset");
  e->add_option("--config", ex.config, "Experiment spec (JSON)");
  e->add_option("--preset", ex.preset, "Built-in preset")->check(CLI::IsMember(ipd::preset_names()));
  e->add_option("--seed", ex.seed, "Override the master seed");
  e->add_option("--repetitions", ex.repetitions, "Override repetitions")->check(CLI::PositiveNumber);
  e->add_option("--threads", ex.threads, "Worker threads (0: all cores)");
  e->add_option("--out", ex.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*s) return cmd_simulate(sim);
    if (*z) return cmd_analyze(an);
    if (*e) return cmd_experiment(ex);
  } catch (const CLI::Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsage;
  } catch (const ipd::DomainError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kDomain;
  } catch (const std::ios_base::failure& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsage;
  } catch (const std::filesystem::filesystem_error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kDomain;
  }
  return kUsage;
}
