#include "ipd/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace ipd {

using nlohmann::json;

double ChainSpec::total_wcet() const {
  double sum = 0.0;
  for (const auto& t : tasks) {
    sum += t.wcet_s;
  }
  return sum;
}

const ChainSpec* Taskset::find(int chain_id) const {
  for (const auto& c : chains) {
    if (c.id == chain_id) {
      return &c;
    }
  }
  return nullptr;
}

double Taskset::max_power() const {
  double m = 0.0;
  for (const auto& c : chains) {
    for (const auto& t : c.tasks) {
      m = std::max(m, t.power_w);
    }
  }
  return m;
}

std::int64_t to_ms(double seconds) { return std::llround(seconds * 1000.0); }

std::int64_t hyperperiod_ms(const Taskset& ts) {
  std::int64_t h = 1;
  for (const auto& c : ts.chains) {
    const std::int64_t t = std::max<std::int64_t>(to_ms(c.period_s), 1);
    const std::int64_t g = std::gcd(h, t);
    const __int128 next = static_cast<__int128>(h / g) * t;
    if (next >= kHyperperiodCapMs) {
      return kHyperperiodCapMs;
    }
    h = static_cast<std::int64_t>(next);
  }
  return ts.chains.empty() ? 0 : h;
}

std::vector<Violation> validate(const Taskset& ts) {
  std::vector<Violation> out;
  std::set<int> ids;
  std::set<int> priorities;
  for (const auto& c : ts.chains) {
    if (!ids.insert(c.id).second) {
      out.push_back({c.id, "duplicate chain id"});
    }
    if (!priorities.insert(c.priority).second) {
      out.push_back({c.id, "duplicate priority"});
    }
    if (c.tasks.empty()) {
      out.push_back({c.id, "chain has no tasks"});
    }
    if (!(c.period_s > 0.0)) {
      out.push_back({c.id, "period must be positive"});
    }
    if (!(c.deadline_s > 0.0)) {
      out.push_back({c.id, "deadline must be positive"});
    } else if (c.deadline_s > c.period_s) {
      out.push_back({c.id, "constrained deadline violated (D > T)"});
    }
    if (c.offset_s < 0.0) {
      out.push_back({c.id, "release offset must be non-negative"});
    }
    for (std::size_t j = 0; j < c.tasks.size(); ++j) {
      const auto& t = c.tasks[j];
      if (!(t.wcet_s > 0.0)) {
        out.push_back({c.id, "task '" + t.name + "' wcet must be positive"});
      }
      if (!(t.power_w >= 0.0)) {
        out.push_back({c.id, "task '" + t.name + "' power draw must be non-negative"});
      }
      if (t.chain_id != c.id || t.index_in_chain != static_cast<int>(j)) {
        out.push_back({c.id, "task '" + t.name + "' chain membership is inconsistent"});
      }
    }
  }
  return out;
}

Taskset rm_priorities(Taskset ts) {
  std::vector<std::size_t> order(ts.chains.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ca = ts.chains[a];
    const auto& cb = ts.chains[b];
    if (to_ms(ca.period_s) != to_ms(cb.period_s)) {
      return to_ms(ca.period_s) < to_ms(cb.period_s);
    }
    return ca.id < cb.id;
  });
  const int n = static_cast<int>(order.size());
  for (int rank = 0; rank < n; ++rank) {
    ts.chains[order[rank]].priority = n - rank;
  }
  return ts;
}

ChainAggregates chain_aggregates(const ChainSpec& chain, double harvest_w) {
  ChainAggregates agg{0.0, 0.0};
  for (const auto& t : chain.tasks) {
    agg.wcet_s += t.wcet_s;
    agg.demand_s += std::max(charging_demand(t.wcet_s, t.power_w, harvest_w), 0.0);
  }
  return agg;
}

double raw_chain_demand(const ChainSpec& chain, double harvest_w) {
  double q = 0.0;
  for (const auto& t : chain.tasks) {
    q += charging_demand(t.wcet_s, t.power_w, harvest_w);
  }
  return q;
}

double min_capacitor(const Taskset& ts, double v_max, double v_min) {
  std::vector<AtomicLoad> loads;
  for (const auto& c : ts.chains) {
    for (const auto& t : c.tasks) {
      if (t.atomic) {
        loads.push_back({t.wcet_s, t.power_w});
      }
    }
  }
  return min_capacitor(loads, v_max, v_min);
}

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_real(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) {
    return static_cast<std::int64_t>(rng());
  }
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return lo + static_cast<std::int64_t>(r % span);
}

std::vector<double> uunifast(int n, double total_u, Rng& rng) {
  if (n < 1 || !(total_u > 0.0)) {
    throw DomainError("uunifast needs n >= 1 and positive utilization");
  }
  std::vector<double> out;
  out.reserve(n);
  double remaining = total_u;
  for (int i = 1; i < n; ++i) {
    const double next = remaining * std::pow(uniform01(rng), 1.0 / static_cast<double>(n - i));
    out.push_back(remaining - next);
    remaining = next;
  }
  out.push_back(remaining);
  return out;
}

double round_tenth_even(double x) {
  // Snap values a hair off a .x5 boundary (binary representation noise) onto it.
  const double scaled = x * 10.0;
  const double snapped = std::nearbyint(scaled * 1e6) / 1e6;
  return std::nearbyint(snapped) / 10.0;
}

double execution_time_for(double period_s, double utilization) {
  return std::max(round_tenth_even(period_s * utilization), 0.1);
}

std::string GenConfig::violation() const {
  if (n_min < 1 || n_max < n_min) return "task count range must satisfy 1 <= n_min <= n_max";
  if (!(utilization.lo > 0.0) || utilization.hi < utilization.lo)
    return "utilization range must be positive and non-empty";
  if (!(period_s.lo >= 1.0) || period_s.hi < period_s.lo)
    return "period range must be non-empty and at least 1 s";
  if (!(low_power.lo >= 0.0) || low_power.hi < low_power.lo) return "low power range invalid";
  if (!(high_power.lo >= 0.0) || high_power.hi < high_power.lo) return "high power range invalid";
  if (!(low_demand_ratio >= 0.0 && low_demand_ratio <= 1.0))
    return "low_demand_ratio must lie in [0, 1]";
  if (!(atomic_probability >= 0.0 && atomic_probability <= 1.0))
    return "atomic_probability must lie in [0, 1]";
  return {};
}

Taskset generate_taskset(const GenConfig& cfg, Rng& rng) {
  if (auto v = cfg.violation(); !v.empty()) {
    throw DomainError("generator config: " + v);
  }
  const int n = static_cast<int>(uniform_int(rng, cfg.n_min, cfg.n_max));
  const double total_u = uniform_real(rng, cfg.utilization.lo, cfg.utilization.hi);
  const auto utils = uunifast(n, total_u, rng);

  Taskset ts;
  for (int i = 0; i < n; ++i) {
    ChainSpec chain;
    chain.id = i + 1;
    chain.name = "t" + std::to_string(i + 1);
    chain.period_s = static_cast<double>(uniform_int(rng, static_cast<std::int64_t>(cfg.period_s.lo),
                                                     static_cast<std::int64_t>(cfg.period_s.hi)));
    chain.deadline_s = chain.period_s;
    chain.priority = 0;

    TaskSpec task;
    task.id = i + 1;
    task.chain_id = chain.id;
    task.index_in_chain = 0;
    task.name = chain.name;
    task.wcet_s = execution_time_for(chain.period_s, utils[i]);
    const bool low = uniform01(rng) < cfg.low_demand_ratio;
    const Range& pr = low ? cfg.low_power : cfg.high_power;
    task.power_w = uniform_real(rng, pr.lo, pr.hi);
    task.atomic = uniform01(rng) < cfg.atomic_probability;
    chain.tasks.push_back(task);
    ts.chains.push_back(std::move(chain));
  }
  return rm_priorities(std::move(ts));
}

Taskset table2_taskset() {
  struct Row {
    const char* name;
    double wcet_s;
    double period_s;
    double power_w;
    int priority;
    bool preemptible;
  };
  static constexpr Row rows[] = {
      {"CRC", 0.076, 5, 0.00949, 7, true},
      {"Sensor", 0.301, 6, 0.05754, 6, false},
      {"SHA", 0.416, 8, 0.0098, 5, true},
      {"FFT", 1.680, 10, 0.01002, 4, true},
      {"String search", 3.235, 15, 0.01013, 3, true},
      {"Camera", 3.997, 60, 0.09388, 2, false},
      {"Basic Math", 12.870, 120, 0.00959, 1, true},
  };
  Taskset ts;
  int id = 1;
  for (const auto& r : rows) {
    ChainSpec c;
    c.id = id;
    c.name = r.name;
    c.period_s = r.period_s;
    c.deadline_s = r.period_s;
    c.priority = r.priority;
    c.tasks.push_back(TaskSpec{id, id, 0, r.name, r.wcet_s, r.power_w, !r.preemptible});
    ts.chains.push_back(std::move(c));
    ++id;
  }
  return ts;
}

std::string taskset_to_json(const Taskset& ts) {
  json doc;
  doc["chains"] = json::array();
  for (const auto& c : ts.chains) {
    json jc;
    jc["id"] = c.id;
    jc["name"] = c.name;
    jc["period_s"] = c.period_s;
    jc["deadline_s"] = c.deadline_s;
    jc["priority"] = c.priority;
    jc["offset_s"] = c.offset_s;
    jc["tasks"] = json::array();
    for (const auto& t : c.tasks) {
      jc["tasks"].push_back(
          {{"id", t.id}, {"name", t.name}, {"wcet_s", t.wcet_s}, {"power_w", t.power_w},
           {"atomic", t.atomic}});
    }
    doc["chains"].push_back(std::move(jc));
  }
  return doc.dump(2) + "\n";
}

Taskset taskset_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("taskset: ") + e.what());
  }
  try {
    Taskset ts;
    for (const auto& jc : doc.at("chains")) {
      ChainSpec c;
      c.id = jc.at("id").get<int>();
      c.name = jc.value("name", "chain" + std::to_string(c.id));
      c.period_s = jc.at("period_s").get<double>();
      c.deadline_s = jc.value("deadline_s", c.period_s);
      c.priority = jc.at("priority").get<int>();
      c.offset_s = jc.value("offset_s", 0.0);
      int j = 0;
      for (const auto& jt : jc.at("tasks")) {
        TaskSpec t;
        t.id = jt.value("id", c.id * 100 + j);
        t.chain_id = c.id;
        t.index_in_chain = j++;
        t.name = jt.value("name", c.name + "." + std::to_string(j));
        t.wcet_s = jt.at("wcet_s").get<double>();
        t.power_w = jt.at("power_w").get<double>();
        t.atomic = jt.at("atomic").get<bool>();
        c.tasks.push_back(std::move(t));
      }
      ts.chains.push_back(std::move(c));
    }
    return ts;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("taskset schema: ") + e.what());
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::ios_base::failure("cannot open " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

Range range_from(const json& j, const char* key, Range fallback) {
  if (!j.contains(key)) {
    return fallback;
  }
  const auto& v = j.at(key);
  if (v.is_number()) {
    const double x = v.get<double>();
    return {x, x};
  }
  return {v.at(0).get<double>(), v.at(1).get<double>()};
}

}  // namespace

Taskset load_taskset(const std::string& path) { return taskset_from_json(read_text_file(path)); }

void save_taskset(const Taskset& ts, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::ios_base::failure("cannot write " + path);
  }
  out << taskset_to_json(ts);
}

GenConfig gen_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("generator config: ") + e.what());
  }
  GenConfig cfg;
  try {
    if (j.contains("n_tasks")) {
      const auto& n = j.at("n_tasks");
      if (n.is_number()) {
        cfg.n_min = cfg.n_max = n.get<int>();
      } else {
        cfg.n_min = n.at(0).get<int>();
        cfg.n_max = n.at(1).get<int>();
      }
    }
    cfg.utilization = range_from(j, "utilization", cfg.utilization);
    cfg.period_s = range_from(j, "period_s", cfg.period_s);
    cfg.low_power = range_from(j, "low_power_w", cfg.low_power);
    cfg.high_power = range_from(j, "high_power_w", cfg.high_power);
    cfg.low_demand_ratio = j.value("low_demand_ratio", cfg.low_demand_ratio);
    cfg.atomic_probability = j.value("atomic_probability", cfg.atomic_probability);
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("generator config schema: ") + e.what());
  }
  return cfg;
}

}  // namespace ipd
