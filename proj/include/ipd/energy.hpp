#pragma once

#include <cstddef>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

namespace ipd {

class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Thresholds follow v_off <= v_min < v_on <= v_max.
struct CapacitorConfig {
  double capacitance_f = 0.1;
  double v_min = 3.0;
  double v_off = 2.9;
  double v_on = 4.04;
  double v_max = 5.8;

  // Empty string when the configuration is consistent.
  std::string violation() const;
  void validate() const;
};

// Stored energy is the state; voltage is always derived from it.
class CapacitorState {
public:
  CapacitorState() = default;
  CapacitorState(const CapacitorConfig& config, double energy_j);

  static CapacitorState at_voltage(const CapacitorConfig& config, double v);

  const CapacitorConfig& config() const { return config_; }
  double energy() const { return energy_; }
  double voltage() const;
  double max_energy() const;

private:
  CapacitorConfig config_{};
  double energy_ = 0.0;
};

enum class HarvestMode { Ideal, Constant, Trace };

struct HarvestSegment {
  double start_s = 0.0;
  double rate_w = 0.0;
};

// Piecewise-constant harvesting power. Ideal mode pins the capacitor at v_max.
class HarvestProfile {
public:
  static HarvestProfile ideal();
  static HarvestProfile constant(double rate_w);
  static HarvestProfile trace(std::vector<HarvestSegment> segments);

  HarvestMode mode() const { return mode_; }
  const std::vector<HarvestSegment>& segments() const { return segments_; }

  double rate_at(double t) const;
  // Start of the first segment strictly after t, or +inf.
  double next_change_after(double t) const;
  // Harvested energy over [t0, t1] ignoring saturation.
  double energy_between(double t0, double t1) const;

private:
  HarvestMode mode_ = HarvestMode::Constant;
  std::vector<HarvestSegment> segments_{{0.0, 0.0}};
};

// Windowed arithmetic mean of observed harvesting rates.
class ChargeEstimator {
public:
  explicit ChargeEstimator(double window_s = 1800.0, double prior_w = 0.0)
      : window_s_(window_s), prior_w_(prior_w) {}

  void observe(double t, double rate_w);
  double estimate(double now) const;

  double window() const { return window_s_; }
  double prior() const { return prior_w_; }
  std::size_t size() const { return samples_.size(); }

private:
  struct Sample {
    double t;
    double rate_w;
  };
  double window_s_;
  double prior_w_;
  std::deque<Sample> samples_;
};

double energy_of_voltage(const CapacitorConfig& config, double v);
double voltage_of_energy(const CapacitorConfig& config, double energy_j);

// energy' = clamp(energy + net_power * dt, 0, E(v_max))
CapacitorState integrate(const CapacitorState& state, double net_power_w, double dt_s);

// Extra harvesting time needed to cover a task's consumption beyond concurrent
// harvesting. Negative when harvest outpaces the task's draw.
double charging_demand(double wcet_s, double power_w, double harvest_w);

// Minimum voltage before dispatch so that `demand_s` of charging is banked
// above v_min. Capped at v_max; non-positive demand yields v_min.
double threshold_voltage(double demand_s, double harvest_w, const CapacitorConfig& config);

// Same as threshold_voltage without the v_max cap, for servability diagnostics.
double uncapped_threshold_voltage(double demand_s, double harvest_w,
                                  const CapacitorConfig& config);

double harvesting_time(const CapacitorState& state, double v_target, double harvest_w);

struct AtomicLoad {
  double wcet_s;
  double power_w;
};

// Smallest capacitance letting any atomic task finish a job started at v_max
// before the capacitor falls to v_min. Zero when there are no atomic tasks.
double min_capacitor(const std::vector<AtomicLoad>& atomic_tasks, double v_max, double v_min);

}  // namespace ipd
