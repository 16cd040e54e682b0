#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ipd/energy.hpp"
#include "ipd/workload.hpp"

namespace ipd {

enum class PolicyKind {
  MixedPreemption,    // charge-aware mixed preemption with JIT checkpointing
  BestEffortJIT,      // QuickRecall-like
  AtomicRestart,      // InK-like
  AtomicChargeAware,  // Rtag-like
  EventFirst,         // CatNap-like
};

std::string to_string(PolicyKind p);
PolicyKind policy_from_string(const std::string& name);
const std::vector<PolicyKind>& all_policies();

struct SimConfig {
  double tick_s = 0.001;
  double horizon_s = 480.0;
  CapacitorConfig capacitor{};
  HarvestProfile harvest = HarvestProfile::constant(0.015);
  PolicyKind policy = PolicyKind::MixedPreemption;
  double checkpoint_store_s = 0.00257;
  double checkpoint_restore_s = 0.00013;
  std::optional<double> checkpoint_power_w;  // defaults to the largest task draw
  std::optional<double> initial_voltage_v;   // defaults to v_on
  double estimator_window_s = 1800.0;
  std::optional<double> estimator_prior_w;  // defaults to the harvest rate at t=0
  bool record_trace = true;

  void validate() const;
};

enum class EventKind {
  Release,
  Dispatch,
  Preempt,
  Complete,
  DeadlineMiss,
  Checkpoint,
  Restore,
  EnterStandby,
  Wake,
  PowerOff,
  PowerOn,
  ChargeWait,
};

std::string to_string(EventKind k);

struct TraceEvent {
  std::int64_t time_us = 0;
  EventKind kind = EventKind::Release;
  int chain = -1;
  int task = -1;
  double voltage = 0.0;
  std::string detail;

  double time_s() const { return static_cast<double>(time_us) * 1e-6; }
};

enum class JobOutcome { CompletedOnTime, CompletedLate, Aborted, Pending };

struct JobRecord {
  int chain_id = 0;
  std::int64_t release_us = 0;
  std::int64_t deadline_us = 0;
  std::int64_t finish_us = -1;
  JobOutcome outcome = JobOutcome::Pending;
};

struct ChainMetrics {
  int chain_id = 0;
  std::string name;
  int priority = 0;
  std::int64_t released = 0;
  std::int64_t completed_by_deadline = 0;
  std::int64_t completed_late = 0;
  std::int64_t aborted = 0;

  double success_ratio() const {
    return released == 0 ? 1.0
                         : static_cast<double>(completed_by_deadline) / static_cast<double>(released);
  }
  std::int64_t missed() const { return released - completed_by_deadline; }
};

struct SimMetrics {
  std::vector<ChainMetrics> chains;
  std::int64_t power_cycles = 0;
  double checkpoint_time_s = 0.0;
  double restore_time_s = 0.0;
  double scheduler_time_s = 0.0;
  double uptime_s = 0.0;
  std::int64_t admission_violations = 0;
  std::vector<int> unservable_tasks;

  // Energy ledger (joules).
  double initial_energy_j = 0.0;
  double final_energy_j = 0.0;
  double harvested_j = 0.0;
  double task_energy_j = 0.0;
  double overhead_energy_j = 0.0;
  double clamped_j = 0.0;
  double shortfall_j = 0.0;

  double success_ratio() const;
  const ChainMetrics* find(int chain_id) const;
};

struct SimResult {
  std::vector<TraceEvent> trace;
  SimMetrics metrics;
  std::vector<JobRecord> jobs;
};

// Snapshot handed to an observer at every scheduling decision in the operation phase.
struct ReadyJob {
  int chain_id;
  int task;
  int priority;
  bool atomic;
};

enum class Action { Run, Continue, ChargeWait, Checkpoint, PowerDown, Idle };

struct DecisionView {
  std::int64_t time_us;
  double voltage;
  std::vector<ReadyJob> ready;
  int chosen_chain;  // -1 when nothing runs
  Action action;
};

using DecisionObserver = std::function<void(const DecisionView&)>;

SimResult run(const Taskset& ts, const SimConfig& cfg, ChargeEstimator estimator,
              const DecisionObserver& observer = {});
SimResult run(const Taskset& ts, const SimConfig& cfg, const DecisionObserver& observer = {});

// Trace CSV: time_s,event,chain,task,voltage_v,detail
std::string trace_csv(const std::vector<TraceEvent>& trace);
// Per-chain rows followed by a power_cycles,checkpoint_time_s,total_uptime_s summary block.
std::string metrics_csv(const SimMetrics& metrics);

SimConfig sim_config_from_json(const std::string& text);
std::string sim_config_to_json(const SimConfig& cfg);

}  // namespace ipd
