#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "hand_examples.hpp"
#include "ipd/analysis.hpp"
#include "ipd/workload.hpp"
#include "rta_oracle.hpp"

using namespace ipd;

TEST_CASE("hand-computed fixed points") {
  for (const auto& ex : hand::examples()) {
    CAPTURE(ex.name);
    const AnalysisContext ctx(ex.chains);
    const auto i = ctx.index_of(ex.chain_id);
    CHECK(blocking(ctx, i) == ex.blocking);
    const auto l = active_period(ctx, i);
    CHECK(l.converged);
    CHECK(l.value_ms == ex.active_period);
    const auto s = start_time(ctx, i, 1);
    CHECK(s.converged);
    CHECK(s.value_ms == ex.start);
    const auto f = finish_time(ctx, i, s.value_ms);
    CHECK(f.value_ms == ex.finish);
    const auto r = wcrt(ctx, i);
    CHECK(r.wcrt_ms == ex.wcrt);
    CHECK(r.schedulable);
    const auto brute = oracle::brute_wcrt(ex.chains, i, 1000);
    CHECK(brute.busy_period_closed);
    CHECK(brute.wcrt_ms == ex.wcrt);
  }
}

TEST_CASE("active period fails at the hyperperiod") {
  // Overloaded: (C + Q) / T = 1.2
  const AnalysisContext ctx({{1, 1, 10, 10, 6, 6, {{6, false}}}});
  const auto l = active_period(ctx, 0);
  CHECK_FALSE(l.converged);
  const auto r = wcrt(ctx, 0);
  CHECK_FALSE(r.schedulable);
  CHECK_FALSE(r.converged);
}

TEST_CASE("multiple jobs in the level-i period") {
  const std::vector<AnalysisContext::Chain> chains{
      {1, 1, 7, 7, 3, 0, {{3, true}}},
      {2, 2, 5, 5, 2, 0, {{2, false}}},
      {3, 3, 70, 70, 1, 0, {{1, false}}}};
  const AnalysisContext ctx(chains);
  const auto i = ctx.index_of(1);
  const auto r = wcrt(ctx, i);
  const auto brute = oracle::brute_wcrt(chains, i, 1000);
  CHECK(r.jobs >= 1);
  CHECK(r.wcrt_ms >= brute.wcrt_ms);
}

TEST_CASE("forcing atomicity only adds blocking") {
  const auto ts = table2_taskset();
  AnalysisOptions atomic;
  atomic.force_atomic = true;
  const AnalysisContext mixed(ts, 0.015), all(ts, 0.015, atomic);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    CHECK(blocking(mixed, i) <= blocking(all, i));
  }
  // Basic Math (12.87 s) now blocks CRC, whose deadline is 5 s.
  CHECK(blocking(all, 0) == 12870);
  CHECK_FALSE(wcrt(all, 0).schedulable);
  CHECK(wcrt(AnalysisContext(ts, 0.1), 0).schedulable);
}

TEST_CASE("reference taskset verdicts") {
  const auto ts = table2_taskset();
  AnalysisOptions raw;
  raw.demand = DemandConvention::Raw;
  CHECK(analyze(ts, 0.015, raw).schedulable);
  CHECK_FALSE(analyze(ts, 0.008, raw).schedulable);
  CHECK_FALSE(analyze(ts, 0.008).schedulable);
  CHECK(charging_utilization(ts, 0.015, false) == doctest::Approx(0.979).epsilon(0.01));
  CHECK(charging_utilization(ts, 0.008, false) == doctest::Approx(1.836).epsilon(0.01));
  CHECK_THROWS_AS(analyze(ts, 0.0), DomainError);
}

TEST_CASE("csv layout") {
  const auto csv = analysis_csv(analyze(table2_taskset(), 0.1));
  CHECK(csv.rfind("chain,B_s,L_s,K,R_s,D_s,schedulable,converged\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 8);
}

TEST_CASE("property: analysis bounds the brute-force schedule") {
  Rng rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const int n = static_cast<int>(uniform_int(rng, 2, 5));
    std::vector<AnalysisContext::Chain> chains;
    std::vector<int> prio(n);
    for (int k = 0; k < n; ++k) prio[k] = k + 1;
    for (int k = n - 1; k > 0; --k) std::swap(prio[k], prio[uniform_int(rng, 0, k)]);
    for (int k = 0; k < n; ++k) {
      AnalysisContext::Chain c{k + 1, prio[k], uniform_int(rng, 4, 30), 0, 0, uniform_int(rng, 0, 3), {}};
      c.deadline_ms = c.period_ms;
      const int m = static_cast<int>(uniform_int(rng, 1, 3));
      for (int j = 0; j < m; ++j) {
        const auto w = uniform_int(rng, 1, 4);
        c.tasks.push_back({w, uniform01(rng) < 0.5});
        c.wcet_ms += w;
      }
      chains.push_back(c);
    }
    const AnalysisContext ctx(chains);
    for (std::size_t i = 0; i < chains.size(); ++i) {
      const auto r = wcrt(ctx, i);
      if (!r.converged) continue;
      const auto brute = oracle::brute_wcrt(chains, i, ctx.hyperperiod_ms() * 2 + 1000);
      CAPTURE(trial);
      CAPTURE(i);
      CHECK(brute.wcrt_ms <= r.wcrt_ms);
      ++checked;
    }
  }
  CHECK(checked > 300);
}

TEST_CASE("property: schedulability is monotone in the harvest rate") {
  Rng rng(99);
  GenConfig cfg;
  cfg.utilization = {0.1, 0.9};
  for (int trial = 0; trial < 200; ++trial) {
    const auto ts = generate_taskset(cfg, rng);
    bool prev = false;
    for (double ws : {1.0, 2.0, 3.0, 5.0, 8.0, 12.0}) {
      const bool ok = analyze(ts, ws).schedulable;
      CHECK((!prev || ok));
      prev = ok;
    }
  }
}
