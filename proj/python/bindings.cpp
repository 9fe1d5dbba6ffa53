#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qnet/photonics.hpp"
#include "qnet/rwa.hpp"
#include "qnet/scenario.hpp"
#include "qnet/simulation.hpp"
#include "qnet/topology.hpp"

namespace py = pybind11;
using namespace qnet;

namespace {

std::vector<NodeId> ids(const std::vector<std::string>& names) {
  std::vector<NodeId> out;
  for (const auto& n : names) out.emplace_back(n);
  return out;
}

std::vector<std::string> names(const std::vector<NodeId>& nodes) {
  std::vector<std::string> out;
  for (const auto& n : nodes) out.push_back(n.str());
  return out;
}

py::dict session_dict(const SessionSummary& s) {
  py::dict d;
  d["id"] = s.id;
  d["state"] = s.state;
  d["ebits"] = s.ebits;
  d["retries"] = s.retries;
  d["duration_s"] = s.duration_s;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "qnetsim core: topology, routing and wavelength assignment, photon statistics, simulation";
  m.attr("__version__") = QNET_VERSION;

  auto base = py::register_exception<Error>(m, "QnetError", PyExc_ValueError);
  py::register_exception<TopologyParseError>(m, "TopologyParseError", base);
  py::register_exception<TopologyValidationError>(m, "TopologyValidationError", base);
  py::register_exception<ScenarioError>(m, "ScenarioError", base);

  py::class_<Topology>(m, "Topology")
      .def_static("parse", [](const std::string& text) { return load_topology(text); }, py::arg("text"))
      .def_static("load", &load_topology_file, py::arg("path"))
      .def_property_readonly("node_ids", [](const Topology& t) {
        std::vector<std::string> out;
        for (const auto& [id, n] : t.nodes()) out.push_back(id.str());
        return out;
      })
      .def_property_readonly("link_count", [](const Topology& t) { return t.links().size(); })
      .def_property_readonly("site_count", &Topology::site_count)
      .def("kind", [](const Topology& t, const std::string& id) { return std::string(to_string(t.node(NodeId(id)).kind())); })
      .def("neighbors", [](const Topology& t, const std::string& id) {
        std::vector<std::string> out;
        for (const auto& [n, l] : t.neighbors(NodeId(id))) out.push_back(n.str());
        return out;
      })
      .def("path_loss_db", [](const Topology& t, const std::vector<std::string>& nodes, bool pdl) {
        const auto v = ids(nodes);
        return path_loss_db(t, std::span<const NodeId>(v), pdl);
      }, py::arg("nodes"), py::arg("include_pdl") = false)
      .def("serialize", &serialize_topology)
      .def("summary", [](const Topology& t) {
        return "OK: " + std::to_string(t.site_count()) + " sites, " + std::to_string(t.nodes().size()) + " nodes, " +
               std::to_string(t.links().size()) + " links";
      })
      .def("__eq__", [](const Topology& a, const Topology& b) { return a == b; });

  m.def("shortest_path", [](const Topology& t, const std::string& src, const std::string& dst, bool pdl)
            -> std::optional<std::pair<std::vector<std::string>, double>> {
        RouteMetric metric;
        metric.include_pdl = pdl;
        auto p = shortest_path(t, metric, NodeId(src), NodeId(dst));
        if (!p) return std::nullopt;
        return std::make_pair(names(p->nodes), p->weight);
      }, py::arg("topology"), py::arg("src"), py::arg("dst"), py::arg("include_pdl") = false);

  m.def("solve_rwa", [](const Topology& t, const std::string& requests, std::size_t k) {
        return solve_rwa_requests(t, parse_rwa_requests(requests), k);
      }, py::arg("topology"), py::arg("requests"), py::arg("k_paths") = 0,
      "Assigns `request <eps> <qnode1> <qnode2>` lines in order; returns ASSIGNED/BLOCKED lines.");

  m.def("transmittance", [](double loss_db) { return transmittance_from_loss(loss_db).eta; }, py::arg("loss_db"));
  m.def("expected_coincidences", [](double rate, double loss_1_db, double loss_2_db, double eff_1, double eff_2,
                                    double duration_s) {
        DetectorModel d1, d2;
        d1.efficiency = eff_1;
        d2.efficiency = eff_2;
        return expected_coincidences(rate, transmittance_from_loss(loss_1_db), transmittance_from_loss(loss_2_db), d1,
                                     d2, duration_s);
      }, py::arg("pair_rate_hz"), py::arg("loss_1_db"), py::arg("loss_2_db"), py::arg("eff_1") = 1.0,
      py::arg("eff_2") = 1.0, py::arg("duration_s") = 1.0);
  m.def("noise_ratio_check", [](std::uint64_t signal, std::uint64_t noise, double threshold) {
        return std::string(to_string(noise_ratio_check(signal, noise, threshold)));
      }, py::arg("signal_counts"), py::arg("noise_counts"), py::arg("threshold") = 1.0 / 6.0);
  m.def("scan_delay", [](std::int64_t truth, std::int64_t lo, std::int64_t hi, double signal_hz, double accidental_hz,
                         std::uint64_t seed) {
        DelayScanModel model;
        model.signal_rate_hz = signal_hz;
        model.accidental_rate_hz = accidental_hz;
        return scan_delay(truth, lo, hi, model, seed).offset;
      }, py::arg("true_offset"), py::arg("lo"), py::arg("hi"), py::arg("signal_rate_hz"),
      py::arg("accidental_rate_hz"), py::arg("seed") = 0);

  py::class_<SimConfig>(m, "SimConfig")
      .def(py::init<>())
      .def_readwrite("seed", &SimConfig::master_seed)
      .def_readwrite("classical_latency_s_per_km", &SimConfig::classical_latency_s_per_km)
      .def_readwrite("end_time_s", &SimConfig::end_time_s)
      .def_readwrite("timeout_s", &SimConfig::timeout_s)
      .def_readwrite("noise_threshold", &SimConfig::noise_threshold)
      .def_readwrite("degradation_threshold_db", &SimConfig::degradation_threshold_db)
      .def_readwrite("k_paths", &SimConfig::k_paths)
      .def_property("max_retries", [](const SimConfig& c) { return c.session.max_retries; },
                    [](SimConfig& c, int v) { c.session.max_retries = v; });

  py::class_<SimulationReport>(m, "Report")
      .def_readonly("trace", &SimulationReport::trace)
      .def_readonly("sweep_violations", &SimulationReport::sweep_violations)
      .def_property_readonly("metrics", [](const SimulationReport& r) {
        py::dict d;
        for (const auto& [k, v] : r.metrics) d[py::str(k)] = v;
        return d;
      })
      .def_property_readonly("sessions", [](const SimulationReport& r) {
        py::list out;
        for (const auto& s : r.sessions) out.append(session_dict(s));
        return out;
      })
      .def("sessions_text", &SimulationReport::sessions_text)
      .def("trace_text", &SimulationReport::trace_text)
      .def("metrics_text", &SimulationReport::metrics_text)
      .def("write", [](const SimulationReport& r, const std::string& dir) { write_report(r, dir); }, py::arg("out_dir"));

  m.def("run", [](const Topology& t, const std::string& scenario, const SimConfig& cfg) {
        const auto sc = parse_scenario(scenario);
        py::gil_scoped_release release;
        return run_simulation(t, sc, cfg);
      }, py::arg("topology"), py::arg("scenario"), py::arg("config") = SimConfig{},
      "Runs a scenario given as text and returns the report.");
}
