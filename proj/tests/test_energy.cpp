#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "ipd/energy.hpp"

using namespace ipd;

namespace {

CapacitorConfig cap(double c = 0.1) {
  CapacitorConfig cfg;
  cfg.capacitance_f = c;
  return cfg;
}

// Independent closed forms.
double e_of(double c, double v) { return 0.5 * c * v * v; }
double q_of(double C, double W, double ws) { return (W - ws) * C / ws; }
double v_thr(double q, double ws, double c, double vmin) {
  return std::sqrt((2.0 * std::max(q, 0.0) * ws + c * vmin * vmin) / c);
}

}  // namespace

TEST_CASE("energy and voltage round-trip") {
  const auto cfg = cap();
  CHECK(energy_of_voltage(cfg, 5.8) == doctest::Approx(1.682));
  CHECK(energy_of_voltage(cfg, 0.0) == 0.0);
  for (double v = 0.0; v <= 5.8; v += 0.37) {
    CHECK(voltage_of_energy(cfg, energy_of_voltage(cfg, v)) == doctest::Approx(v).epsilon(1e-12));
  }
  CHECK_THROWS_AS(energy_of_voltage(cfg, 6.0), DomainError);
  CHECK_THROWS_AS(energy_of_voltage(cfg, -0.1), DomainError);
}

TEST_CASE("capacitor config validation") {
  CHECK(cap().violation().empty());
  auto bad = cap();
  bad.v_min = 4.5;  // above v_on
  CHECK_FALSE(bad.violation().empty());
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = cap(0.0);
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = cap();
  bad.v_off = 3.1;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("integrate clamps to [0, E(v_max)]") {
  const auto cfg = cap();
  auto s = CapacitorState::at_voltage(cfg, 4.0);
  auto up = integrate(s, 10.0, 10.0);
  CHECK(up.voltage() == doctest::Approx(5.8));
  auto down = integrate(s, -10.0, 10.0);
  CHECK(down.energy() == 0.0);
  auto mid = integrate(s, -0.01, 2.0);
  CHECK(mid.energy() == doctest::Approx(e_of(0.1, 4.0) - 0.02));
  CHECK_THROWS_AS(integrate(s, 1.0, -1.0), DomainError);
}

TEST_CASE("charging demand") {
  // Camera at 15 mW.
  CHECK(charging_demand(3.997, 0.09388, 0.015) == doctest::Approx(q_of(3.997, 0.09388, 0.015)));
  CHECK(charging_demand(3.997, 0.09388, 0.015) == doctest::Approx(21.0189).epsilon(1e-4));
  // Harvest outpaces draw: negative demand is preserved.
  CHECK(charging_demand(1.0, 0.005, 0.010) == doctest::Approx(-0.5));
  CHECK_THROWS_WITH_AS(charging_demand(1.0, 0.01, 0.0), doctest::Contains("charging starved"), DomainError);
}

TEST_CASE("threshold voltage") {
  const auto cfg = cap();
  const double q = charging_demand(3.997, 0.09388, 0.015);
  CHECK(threshold_voltage(q, 0.015, cfg) == doctest::Approx(3.9123).epsilon(1e-4));
  CHECK(threshold_voltage(-3.0, 0.015, cfg) == doctest::Approx(3.0));
  CHECK(threshold_voltage(1e6, 0.015, cfg) == doctest::Approx(5.8));
  CHECK(uncapped_threshold_voltage(1e6, 0.015, cfg) > 5.8);
}

TEST_CASE("harvesting time chains demand, threshold and charge time") {
  const auto cfg = cap();
  const double q = charging_demand(2.0, 0.01013, 0.008);
  CHECK(q == doctest::Approx(0.5325));
  const double v = threshold_voltage(q, 0.008, cfg);
  CHECK(v == doctest::Approx(3.0142).epsilon(1e-4));
  const auto at_min = CapacitorState::at_voltage(cfg, 3.0);
  // Charging from v_min to the threshold banks exactly q seconds of harvest.
  CHECK(harvesting_time(at_min, v, 0.008) == doctest::Approx(q));
  CHECK(harvesting_time(CapacitorState::at_voltage(cfg, 5.0), v, 0.008) == 0.0);
  CHECK_THROWS_AS(harvesting_time(at_min, v, 0.0), DomainError);
}

TEST_CASE("property: threshold voltage is monotone in demand and capped") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> qd(-10.0, 200.0), wd(0.001, 0.1), cd(0.01, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const auto cfg = cap(cd(rng));
    const double ws = wd(rng);
    const double q1 = qd(rng), q2 = q1 + std::abs(qd(rng));
    const double v1 = threshold_voltage(q1, ws, cfg), v2 = threshold_voltage(q2, ws, cfg);
    CHECK(v1 <= v2 + 1e-12);
    CHECK(v1 >= cfg.v_min - 1e-12);
    CHECK(v2 <= cfg.v_max + 1e-12);
    CHECK(std::min(v_thr(q2, ws, cfg.capacitance_f, cfg.v_min), cfg.v_max) == doctest::Approx(v2));
  }
}

TEST_CASE("property: harvesting to the threshold stores the demand") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> qd(0.0, 30.0), wd(0.001, 0.05);
  for (int i = 0; i < 1000; ++i) {
    const auto cfg = cap();
    const double ws = wd(rng), q = qd(rng);
    const double v = uncapped_threshold_voltage(q, ws, cfg);
    if (v > cfg.v_max) continue;
    const auto s = CapacitorState::at_voltage(cfg, cfg.v_min);
    CHECK(harvesting_time(s, v, ws) == doctest::Approx(q).epsilon(1e-9));
  }
}

TEST_CASE("minimum capacitor") {
  const std::vector<AtomicLoad> loads{{0.301, 0.05754}, {3.997, 0.09388}};
  const double expected = 3.997 * 0.09388 / (0.5 * (5.8 * 5.8 - 3.0 * 3.0));
  CHECK(min_capacitor(loads, 5.8, 3.0) == doctest::Approx(expected));
  CHECK(min_capacitor(loads, 5.8, 3.0) == doctest::Approx(0.0305).epsilon(0.01));
  CHECK(min_capacitor({}, 5.8, 3.0) == 0.0);
}

TEST_CASE("harvest profiles") {
  const auto c = HarvestProfile::constant(0.015);
  CHECK(c.rate_at(123.0) == 0.015);
  CHECK(std::isinf(c.next_change_after(0.0)));
  CHECK(c.energy_between(0.0, 10.0) == doctest::Approx(0.15));

  const auto t = HarvestProfile::trace({{0.0, 0.01}, {10.0, 0.02}, {30.0, 0.0}});
  CHECK(t.rate_at(5.0) == 0.01);
  CHECK(t.rate_at(10.0) == 0.02);
  CHECK(t.rate_at(100.0) == 0.0);
  CHECK(t.next_change_after(10.0) == 30.0);
  CHECK(t.energy_between(5.0, 35.0) == doctest::Approx(0.05 + 0.4));
  CHECK_THROWS(HarvestProfile::trace({{1.0, 0.01}}));
  CHECK_THROWS(HarvestProfile::trace({{0.0, 0.01}, {0.0, 0.02}}));
  CHECK_THROWS(HarvestProfile::trace({{0.0, -0.01}}));

  CHECK(HarvestProfile::ideal().mode() == HarvestMode::Ideal);
}

TEST_CASE("charge estimator window") {
  ChargeEstimator est(10.0, 0.5);
  CHECK(est.estimate(0.0) == 0.5);
  est.observe(0.0, 1.0);
  est.observe(5.0, 3.0);
  CHECK(est.estimate(5.0) == doctest::Approx(2.0));
  CHECK(est.estimate(12.0) == doctest::Approx(3.0));
  est.observe(20.0, 7.0);
  CHECK(est.estimate(20.0) == doctest::Approx(7.0));
  CHECK(est.estimate(100.0) == 0.5);
}
