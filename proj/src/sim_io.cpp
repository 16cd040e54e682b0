#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "ipd/sim.hpp"
#include "json.hpp"

namespace ipd {

using nlohmann::json;

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string trace_csv(const std::vector<TraceEvent>& trace) {
  std::ostringstream out;
  out << "time_s,event,chain,task,voltage_v,detail\n";
  char buf[128];
  for (const auto& e : trace) {
    std::snprintf(buf, sizeof buf, "%.3f,%s,%d,%d,%.4f,", e.time_s(), to_string(e.kind).c_str(), e.chain,
                  e.task, e.voltage);
    out << buf << csv_field(e.detail) << '\n';
  }
  return out.str();
}

std::string metrics_csv(const SimMetrics& m) {
  std::ostringstream out;
  out << "chain,released,completed_by_deadline,completed_late,aborted,success_ratio\n";
  char buf[256];
  for (const auto& c : m.chains) {
    std::snprintf(buf, sizeof buf, "%d,%lld,%lld,%lld,%lld,%.6f\n", c.chain_id, static_cast<long long>(c.released),
                  static_cast<long long>(c.completed_by_deadline), static_cast<long long>(c.completed_late),
                  static_cast<long long>(c.aborted), c.success_ratio());
    out << buf;
  }
  out << "\npower_cycles,checkpoint_time_s,total_uptime_s\n";
  std::snprintf(buf, sizeof buf, "%lld,%.6f,%.6f\n", static_cast<long long>(m.power_cycles),
                m.checkpoint_time_s, m.uptime_s);
  out << buf;
  return out.str();
}

SimConfig sim_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("sim config: ") + e.what());
  }
  SimConfig cfg;
  try {
    cfg.tick_s = j.value("tick_s", cfg.tick_s);
    cfg.horizon_s = j.value("horizon_s", cfg.horizon_s);
    if (j.contains("capacitor")) {
      const auto& c = j.at("capacitor");
      auto& cap = cfg.capacitor;
      cap.capacitance_f = c.value("capacitance_f", cap.capacitance_f);
      cap.v_min = c.value("v_min", cap.v_min);
      cap.v_off = c.value("v_off", cap.v_off);
      cap.v_on = c.value("v_on", cap.v_on);
      cap.v_max = c.value("v_max", cap.v_max);
    }
    if (j.contains("harvest")) {
      const auto& h = j.at("harvest");
      const std::string mode = h.value("mode", std::string("constant"));
      if (mode == "ideal") {
        cfg.harvest = HarvestProfile::ideal();
      } else if (mode == "constant") {
        cfg.harvest = HarvestProfile::constant(h.at("rate_w").get<double>());
      } else if (mode == "trace") {
        std::vector<HarvestSegment> segs;
        for (const auto& s : h.at("segments")) {
          if (s.is_array()) {
            segs.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
          } else {
            segs.push_back({s.at("start_s").get<double>(), s.at("rate_w").get<double>()});
          }
        }
        cfg.harvest = HarvestProfile::trace(std::move(segs));
      } else {
        throw std::invalid_argument("unknown harvest mode '" + mode + "'");
      }
    }
    if (j.contains("policy")) {
      cfg.policy = policy_from_string(j.at("policy").get<std::string>());
    }
    cfg.checkpoint_store_s = j.value("checkpoint_store_s", cfg.checkpoint_store_s);
    cfg.checkpoint_restore_s = j.value("checkpoint_restore_s", cfg.checkpoint_restore_s);
    if (j.contains("checkpoint_power_w")) cfg.checkpoint_power_w = j.at("checkpoint_power_w").get<double>();
    if (j.contains("initial_voltage_v")) cfg.initial_voltage_v = j.at("initial_voltage_v").get<double>();
    cfg.estimator_window_s = j.value("estimator_window_s", cfg.estimator_window_s);
    if (j.contains("estimator_prior_w")) cfg.estimator_prior_w = j.at("estimator_prior_w").get<double>();
    cfg.record_trace = j.value("record_trace", cfg.record_trace);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("sim config schema: ") + e.what());
  }
  return cfg;
}

std::string sim_config_to_json(const SimConfig& cfg) {
  json j;
  j["tick_s"] = cfg.tick_s;
  j["horizon_s"] = cfg.horizon_s;
  j["capacitor"] = {{"capacitance_f", cfg.capacitor.capacitance_f}, {"v_min", cfg.capacitor.v_min},
                    {"v_off", cfg.capacitor.v_off},                 {"v_on", cfg.capacitor.v_on},
                    {"v_max", cfg.capacitor.v_max}};
  switch (cfg.harvest.mode()) {
    case HarvestMode::Ideal: j["harvest"] = {{"mode", "ideal"}}; break;
    case HarvestMode::Constant:
      j["harvest"] = {{"mode", "constant"}, {"rate_w", cfg.harvest.rate_at(0.0)}};
      break;
    case HarvestMode::Trace: {
      json segs = json::array();
      for (const auto& s : cfg.harvest.segments()) {
        segs.push_back({{"start_s", s.start_s}, {"rate_w", s.rate_w}});
      }
      j["harvest"] = {{"mode", "trace"}, {"segments", segs}};
      break;
    }
  }
  j["policy"] = to_string(cfg.policy);
  j["checkpoint_store_s"] = cfg.checkpoint_store_s;
  j["checkpoint_restore_s"] = cfg.checkpoint_restore_s;
  if (cfg.checkpoint_power_w) j["checkpoint_power_w"] = *cfg.checkpoint_power_w;
  if (cfg.initial_voltage_v) j["initial_voltage_v"] = *cfg.initial_voltage_v;
  j["estimator_window_s"] = cfg.estimator_window_s;
  if (cfg.estimator_prior_w) j["estimator_prior_w"] = *cfg.estimator_prior_w;
  j["record_trace"] = cfg.record_trace;
  return j.dump(2);
}

}  // namespace ipd
