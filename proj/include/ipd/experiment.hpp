#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ipd/analysis.hpp"
#include "ipd/sim.hpp"
#include "ipd/workload.hpp"

namespace ipd {

enum class ExperimentKind { PolicyCompare, CapacitorSweep, SchedVsDemandRatio, SchedVsUtilization };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& name);

struct HarvestSetting {
  std::string label;
  HarvestProfile profile;
};

struct ExperimentSpec {
  std::string id = "experiment";
  ExperimentKind kind = ExperimentKind::PolicyCompare;
  // Analytical sweeps accept mixed_preemption and atomic_charge_aware (every task forced atomic).
  std::vector<PolicyKind> policies;

  // Simulation kinds.
  std::vector<HarvestSetting> harvests;
  std::vector<double> capacitances_f;
  std::string taskset_path;  // empty: built-in reference taskset
  SimConfig sim;             // template; harvest, capacitance and policy are overwritten per point

  // Analytical kinds.
  GenConfig generator;
  std::vector<double> grid;  // low-demand ratios or utilizations
  double harvest_w = 3.0;
  int repetitions = 1000;

  std::uint64_t seed = 1;
  std::string out_dir = ".";
  int threads = 0;  // 0: hardware concurrency

  bool simulated() const {
    return kind == ExperimentKind::PolicyCompare || kind == ExperimentKind::CapacitorSweep;
  }
  std::string violation() const;
};

struct SimRecord {
  std::size_t point = 0;
  std::string harvest;
  double capacitance_f = 0.0;
  PolicyKind policy = PolicyKind::MixedPreemption;
  std::uint64_t seed = 0;
  SimMetrics metrics;
  std::string error;
  double wall_s = 0.0;
};

struct SchedRecord {
  std::size_t point = 0;
  double parameter = 0.0;
  PolicyKind policy = PolicyKind::MixedPreemption;
  int repetitions = 0;
  int schedulable = 0;
  int failures = 0;
  std::uint64_t seed = 0;
  double wall_s = 0.0;

  double ratio() const {
    const int valid = repetitions - failures;
    return valid > 0 ? static_cast<double>(schedulable) / valid : 0.0;
  }
};

struct ExperimentResult {
  std::vector<SimRecord> sim;
  std::vector<SchedRecord> sched;
};

// Seed of repetition `rep` at grid point `point`.
std::uint64_t repetition_seed(std::uint64_t seed, std::size_t point, int reps, int rep);

ExperimentResult run_experiment(const ExperimentSpec& spec);

// Deterministic result tables; wall-clock timings go to a separate table.
std::string sim_records_csv(const ExperimentSpec& spec, const std::vector<SimRecord>& records);
std::string sched_records_csv(const ExperimentSpec& spec, const std::vector<SchedRecord>& records);
std::string timing_csv(const ExperimentSpec& spec, const ExperimentResult& result);

// Writes <out_dir>/<id>.csv and <out_dir>/<id>_timing.csv; returns the paths.
std::vector<std::string> write_experiment(const ExperimentSpec& spec, const ExperimentResult& result);

// Built-in presets: harvest_modes, capacitors, demand_ratio, utilization, smoke.
ExperimentSpec experiment_preset(const std::string& name);
const std::vector<std::string>& preset_names();
// A "preset" key selects the base; remaining keys override it.
ExperimentSpec experiment_spec_from_json(const std::string& text);

}  // namespace ipd
