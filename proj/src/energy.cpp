#include "ipd/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ipd {

std::string CapacitorConfig::violation() const {
  std::ostringstream out;
  if (!(capacitance_f > 0.0)) {
    out << "capacitance must be positive";
  } else if (!(v_off <= v_min)) {
    out << "v_off must not exceed v_min";
  } else if (!(v_min < v_on)) {
    out << "v_min must be below v_on";
  } else if (!(v_on <= v_max)) {
    out << "v_on must not exceed v_max";
  } else if (!(v_off >= 0.0)) {
    out << "v_off must be non-negative";
  }
  return out.str();
}

void CapacitorConfig::validate() const {
  if (auto v = violation(); !v.empty()) {
    throw DomainError("capacitor: " + v);
  }
}

CapacitorState::CapacitorState(const CapacitorConfig& config, double energy_j)
    : config_(config), energy_(std::clamp(energy_j, 0.0, energy_of_voltage(config, config.v_max))) {}

CapacitorState CapacitorState::at_voltage(const CapacitorConfig& config, double v) {
  return CapacitorState(config, energy_of_voltage(config, v));
}

double CapacitorState::voltage() const { return voltage_of_energy(config_, energy_); }

double CapacitorState::max_energy() const { return energy_of_voltage(config_, config_.v_max); }

HarvestProfile HarvestProfile::ideal() {
  HarvestProfile p;
  p.mode_ = HarvestMode::Ideal;
  p.segments_ = {{0.0, std::numeric_limits<double>::infinity()}};
  return p;
}

HarvestProfile HarvestProfile::constant(double rate_w) {
  if (!(rate_w >= 0.0)) {
    throw DomainError("harvest rate must be non-negative");
  }
  HarvestProfile p;
  p.mode_ = HarvestMode::Constant;
  p.segments_ = {{0.0, rate_w}};
  return p;
}

HarvestProfile HarvestProfile::trace(std::vector<HarvestSegment> segments) {
  if (segments.empty() || segments.front().start_s != 0.0) {
    throw DomainError("harvest trace must start at t=0");
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (!(segments[i].rate_w >= 0.0)) {
      throw DomainError("harvest trace rates must be non-negative");
    }
    if (i > 0 && !(segments[i].start_s > segments[i - 1].start_s)) {
      throw DomainError("harvest trace start times must be strictly increasing");
    }
  }
  HarvestProfile p;
  p.mode_ = HarvestMode::Trace;
  p.segments_ = std::move(segments);
  return p;
}

double HarvestProfile::rate_at(double t) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](double v, const HarvestSegment& s) { return v < s.start_s; });
  if (it == segments_.begin()) {
    return segments_.front().rate_w;
  }
  return std::prev(it)->rate_w;
}

double HarvestProfile::next_change_after(double t) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](double v, const HarvestSegment& s) { return v < s.start_s; });
  return it == segments_.end() ? std::numeric_limits<double>::infinity() : it->start_s;
}

double HarvestProfile::energy_between(double t0, double t1) const {
  double total = 0.0;
  double t = t0;
  while (t < t1) {
    double end = std::min(t1, next_change_after(t));
    total += rate_at(t) * (end - t);
    t = end;
  }
  return total;
}

void ChargeEstimator::observe(double t, double rate_w) {
  samples_.push_back({t, rate_w});
  while (!samples_.empty() && samples_.front().t < t - window_s_) {
    samples_.pop_front();
  }
}

double ChargeEstimator::estimate(double now) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : samples_) {
    if (s.t >= now - window_s_ && s.t <= now) {
      sum += s.rate_w;
      ++n;
    }
  }
  return n == 0 ? prior_w_ : sum / static_cast<double>(n);
}

double energy_of_voltage(const CapacitorConfig& config, double v) {
  if (!(v >= 0.0) || v > config.v_max * (1.0 + 1e-12)) {
    throw DomainError("voltage outside [0, v_max]");
  }
  return 0.5 * config.capacitance_f * v * v;
}

double voltage_of_energy(const CapacitorConfig& config, double energy_j) {
  return std::sqrt(2.0 * std::max(energy_j, 0.0) / config.capacitance_f);
}

CapacitorState integrate(const CapacitorState& state, double net_power_w, double dt_s) {
  if (dt_s < 0.0) {
    throw DomainError("integration step must be non-negative");
  }
  return CapacitorState(state.config(), state.energy() + net_power_w * dt_s);
}

double charging_demand(double wcet_s, double power_w, double harvest_w) {
  if (!(harvest_w > 0.0)) {
    throw DomainError("charging starved: harvest rate must be positive");
  }
  return (power_w - harvest_w) * wcet_s / harvest_w;
}

double uncapped_threshold_voltage(double demand_s, double harvest_w,
                                  const CapacitorConfig& config) {
  if (!(harvest_w > 0.0)) {
    throw DomainError("charging starved: harvest rate must be positive");
  }
  const double c = config.capacitance_f;
  const double q = std::max(demand_s, 0.0);
  return std::sqrt((2.0 * q * harvest_w + c * config.v_min * config.v_min) / c);
}

double threshold_voltage(double demand_s, double harvest_w, const CapacitorConfig& config) {
  return std::min(uncapped_threshold_voltage(demand_s, harvest_w, config), config.v_max);
}

double harvesting_time(const CapacitorState& state, double v_target, double harvest_w) {
  const auto& config = state.config();
  if (v_target > config.v_max * (1.0 + 1e-12)) {
    throw DomainError("target voltage above v_max");
  }
  const double needed = energy_of_voltage(config, std::min(v_target, config.v_max)) - state.energy();
  if (needed <= 0.0) {
    return 0.0;
  }
  if (!(harvest_w > 0.0)) {
    throw DomainError("target voltage never reached without harvesting");
  }
  return needed / harvest_w;
}

double min_capacitor(const std::vector<AtomicLoad>& atomic_tasks, double v_max, double v_min) {
  double worst = 0.0;
  for (const auto& t : atomic_tasks) {
    worst = std::max(worst, t.wcet_s * t.power_w);
  }
  if (worst == 0.0) {
    return 0.0;
  }
  return worst / (0.5 * (v_max * v_max - v_min * v_min));
}

}  // namespace ipd
