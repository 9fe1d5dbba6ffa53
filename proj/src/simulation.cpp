#include "qnet/simulation.hpp"

#include <cstdio>
#include <fstream>

namespace qnet {

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

Simulation::Simulation(const Topology& topology, const Scenario& scenario, SimConfig config)
    : config_(std::move(config)) {
  validate_scenario(scenario, topology);
  world_ = std::make_unique<World>(topology, config_.master_seed);
  kernel_ = std::make_unique<Kernel>(config_, *world_);

  const auto switches = topology.nodes_of_kind(NodeKind::Switch);
  NodeId site;
  if (config_.controller_site) {
    site = *config_.controller_site;
    if (!topology.has_node(site)) throw Error("controller site " + site.str() + " is not a node");
  } else if (!switches.empty()) {
    site = switches.front();
  } else if (!topology.nodes().empty()) {
    site = topology.nodes().begin()->first;
  } else {
    throw Error("empty topology");
  }

  controller_ = static_cast<ControllerAgent*>(&kernel_->add_agent(std::make_unique<ControllerAgent>(switches), site));
  for (const auto& sw : switches) {
    auto agent = std::make_unique<SwitchAgent>(make_switch_agent(topology, sw));
    switches_.push_back(agent.get());
    kernel_->add_agent(std::move(agent), sw);
  }
  for (const auto& q : topology.nodes_of_kind(NodeKind::QNode))
    kernel_->add_agent(std::make_unique<QNodeAgent>(q, topology.node(q).qnode()), q);
  for (const auto& e : topology.nodes_of_kind(NodeKind::Eps))
    kernel_->add_agent(std::make_unique<EpsAgent>(e, topology.node(e).eps()), e);

  // scenario actions go first so that time-zero faults precede agent start-up
  for (const auto& ev : scenario.events) {
    if (const auto* r = std::get_if<RequestEvent>(&ev.what)) {
      const auto req = r->request;
      kernel_->schedule_action(ev.at, [this, req] {
        kernel_->send(make_message(MsgKind::Request, req.qnode_1.str(), kControllerId, 0, RequestBody{req}));
      });
    } else if (const auto* d = std::get_if<DriftEvent>(&ev.what)) {
      const auto drift = *d;
      kernel_->schedule_action(ev.at, [this, drift] { world_->add_drift(drift.link, drift.delta_db); });
    } else if (const auto* dn = std::get_if<DownEvent>(&ev.what)) {
      const auto node = dn->node;
      kernel_->schedule_action(ev.at, [this, node] {
        world_->set_down(node);
        kernel_->invalidate_routes();
      });
    } else if (const auto* lk = std::get_if<LeakEvent>(&ev.what)) {
      const auto leak = *lk;
      kernel_->schedule_action(ev.at, [this, leak] { world_->set_leakage(leak.node, leak.rate_hz); });
    }
  }
  kernel_->start_agents();
  kernel_->set_after_event([this] {
    ++sweeps_;
    if (auto bad = controller_->check_invariants()) {
      if (sweep_violations_++ == 0) first_violation_ = format_time(kernel_->now()) + " " + *bad;
    }
  });
}

void Simulation::run() { kernel_->run(seconds_to_ns(config_.end_time_s)); }

std::vector<const SwitchAgent*> Simulation::switch_agents() const {
  return std::vector<const SwitchAgent*>(switches_.begin(), switches_.end());
}

SimulationReport Simulation::report() const {
  SimulationReport rep;
  rep.trace = kernel_->trace();
  rep.sweep_violations = sweep_violations_;
  rep.first_violation = first_violation_;

  const SimTime end = kernel_->now();
  const auto& sessions = controller_->sessions();
  const auto& records = controller_->results().records();
  std::uint64_t complete = 0, incomplete = 0, failed = 0, rejected = 0, unfinished = 0, ebits = 0;
  for (const auto& [id, s] : sessions) {
    SessionSummary sum;
    sum.id = id;
    if (auto it = records.find(id); it != records.end()) {
      sum.state = it->second.final_state;
      sum.ebits = it->second.ebits;
      sum.retries = it->second.retries;
      sum.duration_s = it->second.duration_s;
    } else {
      sum.state = std::string(to_string(s.state.phase));
      sum.retries = s.state.retry_count;
      sum.duration_s = ns_to_seconds(end - s.created_at);
      ++unfinished;
    }
    switch (s.state.phase) {
      case SessionPhase::Complete: ++(s.state.complete ? complete : incomplete); break;
      case SessionPhase::Failed: ++failed; break;
      case SessionPhase::Rejected: ++rejected; break;
      default: break;
    }
    ebits += sum.ebits;
    rep.sessions.push_back(sum);
  }

  std::uint64_t orphans = 0, conflicts = 0;
  for (const auto* sw : switches_) {
    conflicts += sw->port_conflicts();
    for (const auto& cc : sw->cross_connects()) {
      auto it = sessions.find(cc.session);
      if (it == sessions.end() || is_terminal(it->second.state.phase)) ++orphans;
    }
  }

  const auto& c = controller_->counters();
  const auto& st = kernel_->stats();
  const double denom = static_cast<double>(c.admitted + c.rejected_no_eps);
  auto& m = rep.metrics;
  const auto put = [&m](std::string k, std::string v) { m.emplace_back(std::move(k), std::move(v)); };
  put("seed", std::to_string(config_.master_seed));
  put("sim_end_s", format_time(end));
  put("events", std::to_string(st.events));
  put("messages_sent", std::to_string(st.sent));
  put("messages_delivered", std::to_string(st.delivered));
  put("messages_failed", std::to_string(st.failed));
  put("messages_in_flight", std::to_string(st.sent - st.delivered - st.failed));
  put("sessions", std::to_string(sessions.size()));
  put("sessions_complete", std::to_string(complete));
  put("sessions_incomplete", std::to_string(incomplete));
  put("sessions_failed", std::to_string(failed));
  put("sessions_rejected", std::to_string(rejected));
  put("sessions_unfinished", std::to_string(unfinished));
  put("admitted", std::to_string(c.admitted));
  put("blocked", std::to_string(c.blocked));
  put("blocking_ratio", fixed(denom > 0.0 ? static_cast<double>(c.blocked) / denom : 0.0));
  put("reroutes", std::to_string(c.reroutes));
  put("protocol_violations", std::to_string(c.violations));
  put("stale_messages", std::to_string(c.stale));
  put("ebits_total", std::to_string(ebits));
  put("monitor_ticks", std::to_string(c.monitor_ticks));
  put("resource_sweeps", std::to_string(sweeps_));
  put("resource_sweep_violations", std::to_string(sweep_violations_));
  put("orphan_cross_connects", std::to_string(orphans));
  put("port_conflicts", std::to_string(conflicts));
  for (const auto& [kind, n] : st.by_kind) put("msg." + std::string(to_string(kind)), std::to_string(n));
  const double span = ns_to_seconds(end);
  for (const auto& [link, busy] : controller_->link_busy_s())
    put("link_util." + link.str(), fixed(span > 0.0 ? busy / span : 0.0));
  return rep;
}

std::string SimulationReport::trace_text() const {
  std::string out;
  for (const auto& l : trace) {
    out += l;
    out += '\n';
  }
  return out;
}

std::string SimulationReport::metrics_text() const {
  std::string out;
  for (const auto& [k, v] : metrics) out += k + "=" + v + "\n";
  return out;
}

std::string SimulationReport::sessions_text() const {
  std::string out;
  for (const auto& s : sessions)
    out += "SESSION " + std::to_string(s.id) + " " + s.state + " ebits=" + std::to_string(s.ebits) +
           " retries=" + std::to_string(s.retries) + " duration=" + fixed(s.duration_s, 3) + "\n";
  return out;
}

const std::string* SimulationReport::metric(const std::string& key) const {
  for (const auto& [k, v] : metrics)
    if (k == key) return &v;
  return nullptr;
}

SimulationReport run_simulation(const Topology& topology, const Scenario& scenario, const SimConfig& config) {
  Simulation sim(topology, scenario, config);
  sim.run();
  return sim.report();
}

void write_report(const SimulationReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto write = [&](const char* name, const std::string& text) {
    std::ofstream f(out_dir / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (out_dir / name).string());
    f << text;
  };
  write("trace.log", report.trace_text());
  write("metrics.txt", report.metrics_text());
  write("sessions.txt", report.sessions_text());
}

}  // namespace qnet
