#include "ipd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ipd {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  return a >= 0 ? a / b : -((-a + b - 1) / b);
}

// Charging demand rounded up to the millisecond grid (ties toward the safe side).
std::int64_t demand_ms(double demand_s) { return static_cast<std::int64_t>(std::ceil(demand_s * 1000.0 - 1e-6)); }

bool higher(const AnalysisContext::Chain& h, const AnalysisContext::Chain& i) {
  return h.priority > i.priority;
}

}  // namespace

AnalysisContext::AnalysisContext(const Taskset& ts, double harvest_w, AnalysisOptions options)
    : options_(options), harvest_w_(harvest_w) {
  if (!(harvest_w > 0.0)) {
    throw DomainError("charging starved: harvest rate must be positive");
  }
  for (const auto& c : ts.chains) {
    Chain ch{c.id, c.priority, to_ms(c.period_s), to_ms(c.deadline_s), 0, 0, {}};
    for (const auto& t : c.tasks) {
      const std::int64_t cm = to_ms(t.wcet_s);
      const double q = charging_demand(t.wcet_s, t.power_w, harvest_w);
      ch.wcet_ms += cm;
      ch.demand_ms += options.demand == DemandConvention::Clamped ? demand_ms(std::max(q, 0.0))
                                                                  : demand_ms(q);
      ch.tasks.push_back({cm, options.force_atomic || t.atomic});
    }
    chains_.push_back(std::move(ch));
  }
  hyperperiod_ms_ = ipd::hyperperiod_ms(ts);
}

AnalysisContext::AnalysisContext(std::vector<Chain> chains, AnalysisOptions options)
    : chains_(std::move(chains)), options_(options) {
  std::int64_t h = chains_.empty() ? 0 : 1;
  for (auto& c : chains_) {
    if (options.force_atomic) {
      for (auto& t : c.tasks) {
        t.atomic = true;
      }
    }
    const std::int64_t g = std::gcd(h, c.period_ms);
    const __int128 next = static_cast<__int128>(h / g) * c.period_ms;
    h = next >= kHyperperiodCapMs ? kHyperperiodCapMs : static_cast<std::int64_t>(next);
  }
  hyperperiod_ms_ = h;
}

std::size_t AnalysisContext::index_of(int chain_id) const {
  for (std::size_t i = 0; i < chains_.size(); ++i) {
    if (chains_[i].id == chain_id) {
      return i;
    }
  }
  throw std::out_of_range("no chain with id " + std::to_string(chain_id));
}

std::int64_t blocking(const AnalysisContext& ctx, std::size_t i) {
  const auto& ci = ctx.chain(i);
  std::int64_t b = 0;
  for (const auto& l : ctx.chains()) {
    if (l.priority < ci.priority) {
      for (const auto& t : l.tasks) {
        if (t.atomic) {
          b = std::max(b, t.wcet_ms);
        }
      }
    }
  }
  return b;
}

FixedPoint active_period(const AnalysisContext& ctx, std::size_t i) {
  const auto& ci = ctx.chain(i);
  const std::int64_t b = blocking(ctx, i);
  FixedPoint fp{b + ci.wcet_ms, false, 0};
  while (fp.iterations < ctx.options().max_iterations) {
    ++fp.iterations;
    std::int64_t next = b;
    for (const auto& h : ctx.chains()) {
      if (h.priority >= ci.priority) {
        next += ceil_div(fp.value_ms, h.period_ms) * (h.wcet_ms + h.demand_ms);
      }
    }
    if (next == fp.value_ms) {
      fp.converged = true;
      return fp;
    }
    fp.value_ms = next;
    if (fp.value_ms >= ctx.hyperperiod_ms()) {
      return fp;
    }
  }
  return fp;
}

FixedPoint start_time(const AnalysisContext& ctx, std::size_t i, std::int64_t k) {
  const auto& ci = ctx.chain(i);
  if (k < 1) {
    throw std::invalid_argument("job index k is 1-based");
  }
  const std::int64_t b = blocking(ctx, i);
  std::int64_t preceding = 0;
  for (std::size_t p = 0; p + 1 < ci.tasks.size(); ++p) {
    preceding += ci.tasks[p].wcet_ms;
  }
  const std::int64_t seed = (k - 1) * ci.period_ms + b + preceding;
  const std::int64_t own = b + (k - 1) * ci.wcet_ms + preceding + k * ci.demand_ms;

  // The k-th job cannot start before its own release; the seed is a floor.
  FixedPoint fp{seed, false, 0};
  while (fp.iterations < ctx.options().max_iterations) {
    ++fp.iterations;
    std::int64_t next = own;
    for (const auto& h : ctx.chains()) {
      if (higher(h, ci)) {
        next += (floor_div(fp.value_ms, h.period_ms) + 1) * (h.wcet_ms + h.demand_ms);
      }
    }
    next = std::max(next, seed);
    if (next == fp.value_ms) {
      fp.converged = true;
      return fp;
    }
    fp.value_ms = next;
    if (fp.value_ms >= ctx.hyperperiod_ms()) {
      return fp;
    }
  }
  return fp;
}

FixedPoint finish_time(const AnalysisContext& ctx, std::size_t i, std::int64_t start_ms) {
  const auto& ci = ctx.chain(i);
  const auto& last = ci.tasks.back();
  FixedPoint fp{start_ms + last.wcet_ms, true, 0};
  if (last.atomic) {
    return fp;
  }
  fp.converged = false;
  while (fp.iterations < ctx.options().max_iterations) {
    ++fp.iterations;
    std::int64_t next = start_ms + last.wcet_ms;
    for (const auto& h : ctx.chains()) {
      if (higher(h, ci)) {
        const std::int64_t extra =
            ceil_div(fp.value_ms, h.period_ms) - (floor_div(start_ms, h.period_ms) + 1);
        next += extra * (h.wcet_ms + h.demand_ms);
      }
    }
    if (next == fp.value_ms) {
      fp.converged = true;
      return fp;
    }
    fp.value_ms = next;
    if (fp.value_ms >= ctx.hyperperiod_ms()) {
      return fp;
    }
  }
  return fp;
}

AnalyzedChain wcrt(const AnalysisContext& ctx, std::size_t i) {
  const auto& ci = ctx.chain(i);
  AnalyzedChain out;
  out.chain_id = ci.id;
  out.deadline_ms = ci.deadline_ms;
  out.blocking_ms = blocking(ctx, i);
  const auto level = active_period(ctx, i);
  out.active_period_ms = level.value_ms;
  if (!level.converged) {
    out.jobs = ceil_div(level.value_ms, ci.period_ms);
    out.wcrt_ms = level.value_ms;
    return out;
  }
  out.jobs = std::max<std::int64_t>(ceil_div(level.value_ms, ci.period_ms), 1);
  std::int64_t worst = 0;
  for (std::int64_t k = 1; k <= out.jobs; ++k) {
    const auto s = start_time(ctx, i, k);
    if (!s.converged) {
      out.wcrt_ms = std::max(worst, s.value_ms - (k - 1) * ci.period_ms);
      return out;
    }
    const auto f = finish_time(ctx, i, s.value_ms);
    if (!f.converged) {
      out.wcrt_ms = std::max(worst, f.value_ms - (k - 1) * ci.period_ms);
      return out;
    }
    worst = std::max(worst, f.value_ms - (k - 1) * ci.period_ms);
  }
  out.wcrt_ms = worst;
  out.converged = true;
  out.schedulable = worst <= ci.deadline_ms;
  return out;
}

AnalysisReport taskset_schedulable(const AnalysisContext& ctx) {
  AnalysisReport report;
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    report.chains.push_back(wcrt(ctx, i));
    report.schedulable = report.schedulable && report.chains.back().schedulable;
  }
  return report;
}

AnalysisReport analyze(const Taskset& ts, double harvest_w, AnalysisOptions options) {
  return taskset_schedulable(AnalysisContext(ts, harvest_w, options));
}

double charging_utilization(const Taskset& ts, double harvest_w, bool clamp) {
  double u = 0.0;
  for (const auto& c : ts.chains) {
    const double q = clamp ? chain_aggregates(c, harvest_w).demand_s : raw_chain_demand(c, harvest_w);
    u += (c.total_wcet() + q) / c.period_s;
  }
  return u;
}

std::string analysis_csv(const AnalysisReport& report) {
  std::ostringstream out;
  out << "chain,B_s,L_s,K,R_s,D_s,schedulable,converged\n";
  char buf[256];
  for (const auto& c : report.chains) {
    std::snprintf(buf, sizeof buf, "%d,%.3f,%.3f,%lld,%.3f,%.3f,%s,%s\n", c.chain_id,
                  c.blocking_ms / 1000.0, c.active_period_ms / 1000.0,
                  static_cast<long long>(c.jobs), c.wcrt_ms / 1000.0, c.deadline_ms / 1000.0,
                  c.schedulable ? "true" : "false", c.converged ? "true" : "false");
    out << buf;
  }
  return out.str();
}

}  // namespace ipd
