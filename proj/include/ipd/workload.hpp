#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "ipd/energy.hpp"

namespace ipd {

struct TaskSpec {
  int id = 0;
  int chain_id = 0;
  int index_in_chain = 0;
  std::string name;
  double wcet_s = 0.0;
  double power_w = 0.0;
  bool atomic = false;
};

// Larger priority value = higher priority.
struct ChainSpec {
  int id = 0;
  std::string name;
  std::vector<TaskSpec> tasks;
  double period_s = 0.0;
  double deadline_s = 0.0;
  int priority = 0;
  double offset_s = 0.0;

  double total_wcet() const;
};

struct Taskset {
  std::vector<ChainSpec> chains;

  bool empty() const { return chains.empty(); }
  std::size_t size() const { return chains.size(); }
  const ChainSpec* find(int chain_id) const;
  double max_power() const;
};

// Every simulator and analysis input is quantized to this grid.
inline constexpr std::int64_t kQuantumUs = 1000;

std::int64_t to_ms(double seconds);
// LCM of all periods in milliseconds; saturates at kHyperperiodCapMs.
inline constexpr std::int64_t kHyperperiodCapMs = std::int64_t{1} << 60;
std::int64_t hyperperiod_ms(const Taskset& ts);

struct Violation {
  int chain_id;
  std::string message;
};

std::vector<Violation> validate(const Taskset& ts);

// Shorter period gets higher priority; equal periods favour the lower chain id.
Taskset rm_priorities(Taskset ts);

struct ChainAggregates {
  double wcet_s;
  double demand_s;
};

// demand_s sums per-task charging demand clamped at zero.
ChainAggregates chain_aggregates(const ChainSpec& chain, double harvest_w);

// Raw (signed) per-task demand sum; only the utilization metric uses it.
double raw_chain_demand(const ChainSpec& chain, double harvest_w);

// Capacitor sizing over the atomic tasks of a taskset.
double min_capacitor(const Taskset& ts, double v_max, double v_min);

// Portable uniform helpers so generated tasksets are identical across standard libraries.
using Rng = std::mt19937_64;
double uniform01(Rng& rng);
double uniform_real(Rng& rng, double lo, double hi);
std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi);

std::vector<double> uunifast(int n, double total_u, Rng& rng);

// Round half to even at one decimal place.
double round_tenth_even(double x);
// C = max(round(10 * T * U) / 10, 0.1)
double execution_time_for(double period_s, double utilization);

struct Range {
  double lo;
  double hi;
};

struct GenConfig {
  int n_min = 5;
  int n_max = 5;
  Range utilization{0.5, 0.5};
  Range period_s{1.0, 60.0};
  Range low_power{1.0, 3.0};
  Range high_power{8.0, 10.0};
  double low_demand_ratio = 0.5;
  double atomic_probability = 0.5;
  std::uint64_t seed = 1;

  std::string violation() const;
};

Taskset generate_taskset(const GenConfig& cfg, Rng& rng);

// Hardware taskset measured on the reference board (single-task chains, RM priorities).
Taskset table2_taskset();

// Structured-text (JSON) taskset documents.
std::string taskset_to_json(const Taskset& ts);
Taskset taskset_from_json(const std::string& text);
// Throws std::ios_base::failure when the file cannot be read.
std::string read_text_file(const std::string& path);
Taskset load_taskset(const std::string& path);
void save_taskset(const Taskset& ts, const std::string& path);

GenConfig gen_config_from_json(const std::string& text);

}  // namespace ipd
