#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ipd/workload.hpp"

namespace ipd {

// How negative per-task charging demand enters the chain totals.
//   Clamped: Q_i = sum max(Q_i^j, 0) (the sound convention, default).
//   Raw:     Q_i = sum Q_i^j, so low-draw tasks offset the demand of others.
enum class DemandConvention { Clamped, Raw };

struct AnalysisOptions {
  DemandConvention demand = DemandConvention::Clamped;
  // Treat every task as non-preemptible (all-atomic comparator).
  bool force_atomic = false;
  std::int64_t max_iterations = 1'000'000;
};

struct FixedPoint {
  std::int64_t value_ms = 0;
  bool converged = false;
  std::int64_t iterations = 0;
};

struct AnalyzedChain {
  int chain_id = 0;
  std::int64_t blocking_ms = 0;
  std::int64_t active_period_ms = 0;
  std::int64_t jobs = 0;
  std::int64_t wcrt_ms = 0;
  std::int64_t deadline_ms = 0;
  bool schedulable = false;
  bool converged = false;
};

struct AnalysisReport {
  bool schedulable = true;
  std::vector<AnalyzedChain> chains;
};

// Quantized, immutable view of a taskset at a fixed harvesting rate.
class AnalysisContext {
public:
  struct Task {
    std::int64_t wcet_ms;
    bool atomic;
  };
  struct Chain {
    int id;
    int priority;
    std::int64_t period_ms;
    std::int64_t deadline_ms;
    std::int64_t wcet_ms;    // C_i
    std::int64_t demand_ms;  // Q_i
    std::vector<Task> tasks;
  };

  AnalysisContext(const Taskset& ts, double harvest_w, AnalysisOptions options = {});
  // Pre-quantized chains (C_i, Q_i already known); hyperperiod is the LCM of periods.
  explicit AnalysisContext(std::vector<Chain> chains, AnalysisOptions options = {});

  const std::vector<Chain>& chains() const { return chains_; }
  const Chain& chain(std::size_t i) const { return chains_.at(i); }
  std::size_t size() const { return chains_.size(); }
  std::int64_t hyperperiod_ms() const { return hyperperiod_ms_; }
  const AnalysisOptions& options() const { return options_; }
  double harvest_w() const { return harvest_w_; }

  // Index of a chain by id; throws when absent.
  std::size_t index_of(int chain_id) const;

private:
  std::vector<Chain> chains_;
  std::int64_t hyperperiod_ms_ = 0;
  AnalysisOptions options_;
  double harvest_w_ = 0.0;
};

std::int64_t blocking(const AnalysisContext& ctx, std::size_t i);
FixedPoint active_period(const AnalysisContext& ctx, std::size_t i);
// Start time of the last task of job k (1-based) measured from the critical instant.
FixedPoint start_time(const AnalysisContext& ctx, std::size_t i, std::int64_t k);
FixedPoint finish_time(const AnalysisContext& ctx, std::size_t i, std::int64_t start_ms);
AnalyzedChain wcrt(const AnalysisContext& ctx, std::size_t i);
AnalysisReport taskset_schedulable(const AnalysisContext& ctx);

AnalysisReport analyze(const Taskset& ts, double harvest_w, AnalysisOptions options = {});

// sum (C_i + Q_i) / T_i, with raw or clamped per-task demand.
double charging_utilization(const Taskset& ts, double harvest_w, bool clamp);

// CSV: chain,B_s,L_s,K,R_s,D_s,schedulable,converged
std::string analysis_csv(const AnalysisReport& report);

}  // namespace ipd
