#include "qnet/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qnet/photonics.hpp"

namespace qnet {

Topology discover_topology(const std::vector<DiscoverBody>& replies) {
  std::map<NodeId, Node> nodes;
  std::map<LinkKey, Link> links;
  for (const auto& r : replies) {
    for (const auto& n : r.nodes) nodes.emplace(n.id, n);
    for (const auto& l : r.links) links.emplace(l.key(), l);
  }
  std::vector<Node> nv;
  for (auto& [id, n] : nodes) nv.push_back(n);
  std::vector<Link> lv;
  for (auto& [k, l] : links) lv.push_back(l);
  return Topology(std::move(nv), std::move(lv));
}

void ResultStore::post(SessionRecord record) {
  const SessionId id = record.id;
  if (!records_.emplace(id, std::move(record)).second)
    throw DuplicateResultError("results already stored for session " + std::to_string(id));
}

std::variant<EpsChoice, Blocked> select_eps(const Topology& topology, const ChannelLedger& ledger, const NodeId& q1,
                                            const NodeId& q2, QubitEncoding encoding, const RouteMetric& metric,
                                            std::size_t k_paths) {
  std::optional<EpsChoice> best;
  double best_score = std::numeric_limits<double>::infinity();
  Blocked furthest{BlockCause::NoPath};
  for (const auto& eps : topology.nodes_of_kind(NodeKind::Eps)) {
    if (!topology.node(eps).eps().encodings.contains(encoding)) continue;
    if (metric.unusable_nodes.contains(eps)) continue;
    ChannelLedger scratch = ledger;
    auto r = assign_pair(topology, scratch, eps, q1, q2, metric, 0, k_paths);
    if (auto* b = std::get_if<Blocked>(&r)) {
      if (static_cast<int>(b->cause) > static_cast<int>(furthest.cause)) furthest = *b;
      continue;
    }
    auto& a = std::get<PairAssignment>(r);
    const double score = std::max(a.path_1.total_loss_db, a.path_2.total_loss_db);
    if (score < best_score) {
      best_score = score;
      best = EpsChoice{eps, std::move(a)};
    }
  }
  if (best) return *best;
  return furthest;
}

ControllerAgent::ControllerAgent(std::vector<NodeId> switch_agents)
    : Agent(kControllerId), switch_agents_(std::move(switch_agents)) {}

Message ControllerAgent::internal(MsgKind kind, SessionId id, Payload payload) const {
  return make_message(kind, kControllerId, kControllerId, id, std::move(payload));
}

void ControllerAgent::on_start(AgentContext&) {}

void ControllerAgent::start_discovery(AgentContext& ctx) {
  if (discovering_ || discovered_) return;
  discovering_ = true;
  if (switch_agents_.empty()) {
    finish_discovery(ctx);
    return;
  }
  for (const auto& sw : switch_agents_) ctx.send(out(MsgKind::DiscoverQuery, sw.str(), 0));
  ctx.set_timer(seconds_to_ns(ctx.config().timeout_s), Timer{"discovery", 0, 0});
}

void ControllerAgent::finish_discovery(AgentContext& ctx) {
  if (discovered_) return;
  discovered_ = true;
  std::set<NodeId> replied;
  for (const auto& r : replies_) replied.insert(r.switch_id);
  for (const auto& sw : switch_agents_)
    if (!replied.contains(sw)) unreachable_.insert(sw);
  try {
    topology_ = discover_topology(replies_);
  } catch (const Error&) {
    // a partial view that does not validate is unusable; route nothing
    topology_ = Topology();
  }
  ledger_ = ChannelLedger(topology_);
  for (const auto& [key, link] : topology_.links()) {
    LinkStatus st;
    st.baseline_db = st.current_db = link.weight();
    st.down = unreachable_.contains(key.a) || unreachable_.contains(key.b);
    status_[key] = st;
  }
  auto queued = std::move(queued_);
  queued_.clear();
  for (const auto& r : queued) admit_request(r, ctx);
}

void ControllerAgent::on_message(const Message& msg, AgentContext& ctx) {
  switch (msg.kind) {
    case MsgKind::DiscoverReply:
      if (discovered_ || !msg.has<DiscoverBody>()) return;
      replies_.push_back(msg.body<DiscoverBody>());
      if (replies_.size() == switch_agents_.size()) finish_discovery(ctx);
      return;
    case MsgKind::Request:
      if (!msg.has<RequestBody>()) {
        ++counters_.ignored;
        return;
      }
      if (!discovered_) {
        queued_.push_back(msg.body<RequestBody>().request);
        start_discovery(ctx);
      } else
        admit_request(msg.body<RequestBody>().request, ctx);
      return;
    default:
      break;
  }
  auto it = sessions_.find(msg.session);
  if (it == sessions_.end()) {
    ++counters_.ignored;
    return;
  }
  ++it->second.messages;
  if (msg.attempt != it->second.state.retry_count) {
    ++counters_.stale;
    return;
  }
  apply(msg.session, msg, ctx);
}

void ControllerAgent::on_delivery_failure(const Message&, AgentContext&) {
  // surfaces later as a phase timeout
  ++counters_.delivery_failures;
}

SessionId ControllerAgent::admit_request(const EntanglementRequest& request, AgentContext& ctx) {
  const SessionId id = next_id_++;
  Session& s = sessions_[id];
  s.ctx.id = id;
  s.ctx.request = request;
  s.ctx.config = ctx.config().session;
  s.created_at = ctx.now();

  const auto reject = [&](const std::string& cause) {
    ++counters_.rejected;
    if (cause == "no_eps") {
      ++counters_.blocked;
      ++counters_.rejected_no_eps;
    }
    apply(id, internal(MsgKind::Reject, id, CauseBody{cause}), ctx);
    return id;
  };

  const Node* n1 = topology_.find_node(request.qnode_1);
  const Node* n2 = topology_.find_node(request.qnode_2);
  if (!n1 || !n2 || n1->kind() != NodeKind::QNode || n2->kind() != NodeKind::QNode ||
      request.qnode_1 == request.qnode_2)
    return reject("invalid_pair");
  if (request.start_time >= request.end_time || request.end_time <= ctx.now()) return reject("invalid_window");
  if (!n1->qnode().supported_encodings.contains(request.qubit_type) ||
      !n2->qnode().supported_encodings.contains(request.qubit_type))
    return reject("unsupported_encoding");
  const auto& bases = bases_for(request.qubit_type);
  if (std::find(bases.begin(), bases.end(), request.calib_basis) == bases.end()) return reject("invalid_basis");

  monitor_tick(ctx);
  const bool now_start = request.start_time <= ctx.now();
  // future sessions are checked against an empty ledger; resources are only
  // taken when their paths are established
  const ChannelLedger probe = now_start ? ledger_ : ChannelLedger(topology_);
  const auto choice = select_eps(routing_view(), probe, request.qnode_1, request.qnode_2, request.qubit_type,
                                 routing_metric(), ctx.config().k_paths);
  if (std::holds_alternative<Blocked>(choice)) return reject("no_eps");

  ++counters_.admitted;
  if (now_start) {
    apply(id, internal(MsgKind::Accept, id), ctx);
  } else {
    ctx.set_timer(request.start_time - ctx.now(), Timer{"start", id, s.epoch});
    ensure_monitor(ctx);
  }
  return id;
}

RouteMetric ControllerAgent::routing_metric() const {
  RouteMetric m;
  for (const auto& [key, st] : status_)
    if (st.down) m.unusable_links.insert(key);
  m.unusable_nodes = down_nodes_;
  m.unusable_nodes.insert(unreachable_.begin(), unreachable_.end());
  return m;
}

Topology ControllerAgent::routing_view() const {
  std::map<LinkKey, double> extra;
  for (const auto& [key, st] : status_)
    if (st.current_db != st.baseline_db) extra[key] = st.current_db - st.baseline_db;
  return extra.empty() ? topology_ : topology_.with_extra_loss(extra);
}

void ControllerAgent::monitor_tick(AgentContext& ctx) {
  ++counters_.monitor_ticks;
  const World& world = ctx.world();
  down_nodes_.clear();
  for (const auto& [id, node] : topology_.nodes())
    if (world.is_down(id)) down_nodes_.insert(id);
  for (auto& [key, st] : status_) {
    const bool endpoint_down = down_nodes_.contains(key.a) || down_nodes_.contains(key.b) ||
                               unreachable_.contains(key.a) || unreachable_.contains(key.b);
    st.down = endpoint_down;
    if (!endpoint_down && world.baseline().find_link(key.a, key.b)) st.current_db = world.link_loss_db(key);
    st.degraded = st.current_db > st.baseline_db + ctx.config().degradation_threshold_db;
  }
}

bool ControllerAgent::any_active() const {
  return std::any_of(sessions_.begin(), sessions_.end(),
                     [](const auto& kv) { return !is_terminal(kv.second.state.phase); });
}

void ControllerAgent::ensure_monitor(AgentContext& ctx) {
  if (monitor_running_) return;
  monitor_running_ = true;
  ctx.set_timer(seconds_to_ns(ctx.config().monitor_interval_s), Timer{"monitor", 0, 0});
}

void ControllerAgent::establish(SessionId id, AgentContext& ctx) {
  Session& s = sessions_.at(id);
  if (s.state.phase != SessionPhase::Routing) return;
  monitor_tick(ctx);
  const Topology view = routing_view();
  const auto& req = s.ctx.request;
  auto choice = select_eps(view, ledger_, req.qnode_1, req.qnode_2, req.qubit_type, routing_metric(),
                           ctx.config().k_paths);
  if (auto* b = std::get_if<Blocked>(&choice)) {
    if (!s.was_blocked) ++counters_.blocked;
    s.was_blocked = true;
    apply(id, internal(MsgKind::RouteBlocked, id, CauseBody{std::string(to_string(b->cause))}), ctx);
    return;
  }
  const NodeId eps = std::get<EpsChoice>(choice).eps;
  auto result = assign_pair(view, ledger_, eps, req.qnode_1, req.qnode_2, routing_metric(), id, ctx.config().k_paths);
  const auto& a = std::get<PairAssignment>(result);
  s.assignment = a;
  assigned_at_[id] = ctx.now();
  s.ctx.eps = eps;
  s.ctx.predicted_loss_db = {a.path_1.total_loss_db, a.path_2.total_loss_db};

  // nominal receiver offset from fiber lengths, in detector clock ticks
  const auto length = [&](const QuantumPath& p) {
    double km = 0.0;
    for (const auto& k : p.links) km += view.link(k.a, k.b).length_km;
    return km;
  };
  const double tick_s = view.node(req.qnode_2).qnode().detector.time_bin_width_s;
  const double dt_s = (length(a.path_2) - length(a.path_1)) * 1e3 / ctx.config().fiber_speed_m_per_s;
  const std::int64_t nominal = std::llround(dt_s / tick_s);
  s.ctx.delay_range = RangeBody{nominal - ctx.config().delay_half_range, nominal + ctx.config().delay_half_range};

  std::map<NodeId, std::vector<CrossConnect>> by_switch;
  for (const auto& cc : a.cross_connects) by_switch[cc.switch_id].push_back(cc);
  for (auto& [sw, list] : by_switch) {
    Message m = out(MsgKind::Connect, sw.str(), id, CrossConnectBody{std::move(list)});
    m.attempt = s.state.retry_count;
    ctx.send(std::move(m));
  }

  PathsBody body;
  body.eps = eps;
  body.qnode_1 = req.qnode_1;
  body.qnode_2 = req.qnode_2;
  body.path_1 = a.path_1.nodes;
  body.path_2 = a.path_2.nodes;
  body.signal = a.signal_ch.label;
  body.idler = a.idler_ch.label;
  body.endpoint_1 = a.endpoint_1.channel_index;
  body.endpoint_2 = a.endpoint_2.channel_index;
  body.loss_1_db = a.path_1.total_loss_db;
  body.loss_2_db = a.path_2.total_loss_db;
  body.pair_rate_hz = view.node(eps).eps().pair_rate_hz;
  body.encoding = req.qubit_type;
  body.basis = req.calib_basis;
  body.end_time = req.end_time;
  body.target_ebits = req.target_ebits;
  body.nominal_offset = nominal;
  body.attempt = s.state.retry_count;
  apply(id, internal(MsgKind::PathsEstablished, id, body), ctx);
}

void ControllerAgent::release(Session& s, AgentContext& ctx) {
  if (!s.assignment) return;
  const SessionId id = s.ctx.id;
  const double held = ns_to_seconds(ctx.now() - assigned_at_[id]);
  for (const auto* p : {&s.assignment->path_1, &s.assignment->path_2})
    for (const auto& k : p->links) busy_s_[k] += held;
  assigned_at_.erase(id);

  std::set<NodeId> switches;
  for (const auto& cc : s.assignment->cross_connects) switches.insert(cc.switch_id);
  for (const auto& sw : switches) {
    Message m = out(MsgKind::Disconnect, sw.str(), id);
    m.attempt = s.state.retry_count;
    ctx.send(std::move(m));
  }
  release_assignment(ledger_, id);
  s.assignment.reset();
}

void ControllerAgent::finalize(SessionId id, Session& s, AgentContext& ctx) {
  release(s, ctx);
  SessionRecord rec;
  rec.id = id;
  rec.request = s.ctx.request;
  rec.final_state = describe(s.state);
  rec.ebits = s.state.ebits;
  rec.retries = s.state.retry_count;
  rec.duration_s = ns_to_seconds(ctx.now() - s.created_at);
  rec.messages = s.messages;
  results_.post(std::move(rec));
}

void ControllerAgent::arm_timeout(SessionId id, Session& s, AgentContext& ctx) {
  const SimConfig& cfg = ctx.config();
  double wait = cfg.timeout_s;
  switch (s.state.phase) {
    case SessionPhase::Requested:
    case SessionPhase::Routing:
    case SessionPhase::Ready:
      return;
    case SessionPhase::VerifyQuantum:
      wait += 2.0 * cfg.session.probe_duration_s;
      break;
    case SessionPhase::CalibAlignment:
      wait += 2.0;
      break;
    case SessionPhase::CalibBitSync:
    case SessionPhase::CalibDelayScan: {
      // worst case of the scan: every candidate dwells twice at the cap
      const auto& req = s.ctx.request;
      const double rate = expected_coincidences(
          topology_.node(s.ctx.eps).eps().pair_rate_hz, transmittance_from_loss(s.state.est_loss_db[0]),
          transmittance_from_loss(s.state.est_loss_db[1]), topology_.node(req.qnode_1).qnode().detector,
          topology_.node(req.qnode_2).qnode().detector, 1.0);
      const double candidates = static_cast<double>(2 * cfg.delay_half_range + 1);
      const double budget = rate > 0.0 ? candidates * 2.0 * 2.5 * 10.0 / rate : 0.0;
      wait += std::min(budget, 3600.0);
      break;
    }
    case SessionPhase::Entangling:
      wait += std::max(0.0, ns_to_seconds(s.ctx.request.end_time - ctx.now()));
      break;
    default:
      break;
  }
  ctx.set_timer(seconds_to_ns(wait), Timer{"phase", id, s.epoch});
}

void ControllerAgent::apply(SessionId id, const Message& msg, AgentContext& ctx) {
  Session& s = sessions_.at(id);
  const SessionState prev = s.state;
  StepResult r = step_state(s.state, s.ctx, msg);
  s.state = r.state;
  if (r.violation) ++counters_.violations;
  for (auto& m : r.emitted) {
    m.attempt = m.kind == MsgKind::Abort ? prev.retry_count : s.state.retry_count;
    ctx.send(std::move(m));
  }
  const bool moved = s.state.phase != prev.phase || s.state.retry_count != prev.retry_count;
  if (!moved) return;
  ++s.epoch;

  if (is_terminal(s.state.phase)) {
    finalize(id, s, ctx);
    return;
  }
  if (s.state.phase == SessionPhase::Routing) {
    ensure_monitor(ctx);
    if (s.assignment) {
      release(s, ctx);
      ++counters_.reroutes;
    }
    if (prev.phase == SessionPhase::Routing)
      ctx.set_timer(seconds_to_ns(ctx.config().retry_backoff_s), Timer{"retry", id, s.epoch});
    else
      establish(id, ctx);
    return;
  }
  if (s.state.phase == SessionPhase::Ready) {
    ++s.ready_entries;
    ++s.starts;
    apply(id, internal(MsgKind::Start, id), ctx);
    return;
  }
  arm_timeout(id, s, ctx);
}

void ControllerAgent::on_timer(const Timer& timer, AgentContext& ctx) {
  if (timer.kind == "discovery") {
    finish_discovery(ctx);
    return;
  }
  if (timer.kind == "monitor") {
    monitor_tick(ctx);
    if (any_active())
      ctx.set_timer(seconds_to_ns(ctx.config().monitor_interval_s), Timer{"monitor", 0, 0});
    else
      monitor_running_ = false;
    return;
  }
  auto it = sessions_.find(timer.session);
  if (it == sessions_.end()) return;
  Session& s = it->second;
  if (s.epoch != timer.token || is_terminal(s.state.phase)) return;
  if (timer.kind == "start") {
    apply(timer.session, internal(MsgKind::Accept, timer.session), ctx);
  } else if (timer.kind == "retry") {
    establish(timer.session, ctx);
  } else if (timer.kind == "phase") {
    apply(timer.session, internal(MsgKind::Timeout, timer.session, CauseBody{"timeout"}), ctx);
  }
}

std::optional<std::string> ControllerAgent::check_invariants() const {
  if (auto bad = ledger_.inconsistency()) return "ledger: " + *bad;
  for (const auto& [id, a] : ledger_.active()) {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return "ledger holds unknown session " + std::to_string(id);
    if (is_terminal(it->second.state.phase)) return "terminal session " + std::to_string(id) + " holds channels";
    if (!it->second.assignment || !(*it->second.assignment == a))
      return "session " + std::to_string(id) + " disagrees with ledger";
  }
  for (const auto& [id, s] : sessions_)
    if (s.assignment && !ledger_.is_active(id)) return "session " + std::to_string(id) + " missing from ledger";
  for (const auto& eps : topology_.nodes_of_kind(NodeKind::Eps))
    if (ledger_.active_pairs(eps) > topology_.node(eps).eps().capacity()) return "capacity exceeded at " + eps.str();
  return std::nullopt;
}

}  // namespace qnet
