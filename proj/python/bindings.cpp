#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ipd/analysis.hpp"
#include "ipd/experiment.hpp"
#include "ipd/sim.hpp"
#include "ipd/workload.hpp"

namespace py = pybind11;
using namespace ipd;

namespace {

py::dict chain_dict(const ChainSpec& c) {
  py::list tasks;
  for (const auto& t : c.tasks) {
    py::dict d;
    d["id"] = t.id;
    d["name"] = t.name;
    d["wcet_s"] = t.wcet_s;
    d["power_w"] = t.power_w;
    d["atomic"] = t.atomic;
    tasks.append(d);
  }
  py::dict d;
  d["id"] = c.id;
  d["name"] = c.name;
  d["period_s"] = c.period_s;
  d["deadline_s"] = c.deadline_s;
  d["priority"] = c.priority;
  d["offset_s"] = c.offset_s;
  d["tasks"] = tasks;
  return d;
}

py::dict metrics_dict(const SimMetrics& m) {
  py::list chains;
  for (const auto& c : m.chains) {
    py::dict d;
    d["chain"] = c.chain_id;
    d["name"] = c.name;
    d["priority"] = c.priority;
    d["released"] = c.released;
    d["completed_by_deadline"] = c.completed_by_deadline;
    d["completed_late"] = c.completed_late;
    d["aborted"] = c.aborted;
    d["success_ratio"] = c.success_ratio();
    chains.append(d);
  }
  py::dict d;
  d["chains"] = chains;
  d["success_ratio"] = m.success_ratio();
  d["power_cycles"] = m.power_cycles;
  d["checkpoint_time_s"] = m.checkpoint_time_s;
  d["restore_time_s"] = m.restore_time_s;
  d["uptime_s"] = m.uptime_s;
  d["admission_violations"] = m.admission_violations;
  d["unservable_tasks"] = m.unservable_tasks;
  d["harvested_j"] = m.harvested_j;
  d["task_energy_j"] = m.task_energy_j;
  d["overhead_energy_j"] = m.overhead_energy_j;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ipdsched, m) {
  m.doc() = "Energy-aware mixed-preemption scheduling for intermittent devices";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

  py::class_<Taskset>(m, "Taskset")
      .def_static("from_json", &taskset_from_json, py::arg("text"))
      .def_static("load", &load_taskset, py::arg("path"))
      .def_static("table2", &table2_taskset, "The seven-chain reference taskset.")
      .def("to_json", &taskset_to_json)
      .def("save", [](const Taskset& ts, const std::string& path) { save_taskset(ts, path); }, py::arg("path"))
      .def("__len__", &Taskset::size)
      .def_property_readonly("chains",
                             [](const Taskset& ts) {
                               py::list out;
                               for (const auto& c : ts.chains) out.append(chain_dict(c));
                               return out;
                             })
      .def("hyperperiod_s", [](const Taskset& ts) { return static_cast<double>(hyperperiod_ms(ts)) / 1000.0; });

  m.def("generate",
        [](const std::string& config_json, std::uint64_t seed) {
          auto cfg = gen_config_from_json(config_json);
          Rng rng(seed);
          return generate_taskset(cfg, rng);
        },
        py::arg("config_json") = "{}", py::arg("seed") = 1);

  m.def("min_capacitor", py::overload_cast<const Taskset&, double, double>(&min_capacitor), py::arg("taskset"),
        py::arg("v_max") = 5.8, py::arg("v_min") = 3.0);
  m.def("charging_utilization", &charging_utilization, py::arg("taskset"), py::arg("harvest_w"),
        py::arg("clamp") = false);

  m.def("analyze",
        [](const Taskset& ts, double harvest_w, bool raw, bool all_atomic) {
          AnalysisOptions opt;
          opt.demand = raw ? DemandConvention::Raw : DemandConvention::Clamped;
          opt.force_atomic = all_atomic;
          const auto r = analyze(ts, harvest_w, opt);
          py::list chains;
          for (const auto& c : r.chains) {
            py::dict d;
            d["chain"] = c.chain_id;
            d["blocking_s"] = c.blocking_ms / 1000.0;
            d["active_period_s"] = c.active_period_ms / 1000.0;
            d["jobs"] = c.jobs;
            d["wcrt_s"] = c.wcrt_ms / 1000.0;
            d["deadline_s"] = c.deadline_ms / 1000.0;
            d["schedulable"] = c.schedulable;
            d["converged"] = c.converged;
            chains.append(d);
          }
          py::dict d;
          d["schedulable"] = r.schedulable;
          d["utilization"] = charging_utilization(ts, harvest_w, !raw);
          d["chains"] = chains;
          d["csv"] = analysis_csv(r);
          return d;
        },
        py::arg("taskset"), py::arg("harvest_w"), py::arg("raw") = false, py::arg("all_atomic") = false);

  m.def("policies", [] {
    std::vector<std::string> out;
    for (auto p : all_policies()) out.push_back(to_string(p));
    return out;
  });

  m.def("simulate",
        [](const Taskset& ts, const std::string& config_json, std::optional<std::string> policy,
           std::optional<double> horizon_s, bool trace) {
          auto cfg = sim_config_from_json(config_json);
          if (policy) cfg.policy = policy_from_string(*policy);
          if (horizon_s) cfg.horizon_s = *horizon_s;
          cfg.record_trace = trace;
          SimResult r;
          {
            py::gil_scoped_release release;
            r = run(ts, cfg);
          }
          auto d = metrics_dict(r.metrics);
          d["metrics_csv"] = metrics_csv(r.metrics);
          if (trace) d["trace_csv"] = trace_csv(r.trace);
          return d;
        },
        py::arg("taskset"), py::arg("config_json") = "{}", py::arg("policy") = py::none(),
        py::arg("horizon_s") = py::none(), py::arg("trace") = false);

  m.def("presets", &preset_names);

  m.def("run_experiment",
        [](const std::string& preset_or_json, std::optional<int> repetitions, std::optional<std::uint64_t> seed,
           std::optional<std::string> out_dir) {
          auto spec = preset_or_json.find('{') == std::string::npos ? experiment_preset(preset_or_json)
                                                                   : experiment_spec_from_json(preset_or_json);
          if (repetitions) spec.repetitions = *repetitions;
          if (seed) spec.seed = *seed;
          ExperimentResult r;
          {
            py::gil_scoped_release release;
            r = run_experiment(spec);
          }
          if (out_dir) {
            spec.out_dir = *out_dir;
            write_experiment(spec, r);
          }
          return spec.simulated() ? sim_records_csv(spec, r.sim) : sched_records_csv(spec, r.sched);
        },
        py::arg("preset_or_json"), py::arg("repetitions") = py::none(), py::arg("seed") = py::none(),
        py::arg("out_dir") = py::none());
}
