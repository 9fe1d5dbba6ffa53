#include "qnet/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qnet/photonics.hpp"

namespace qnet {

namespace {

template <typename L>
void reply(const L& s, AgentContext& ctx, Message m) {
  m.attempt = s.paths.attempt;
  ctx.send(std::move(m));
}

}  // namespace

QNodeAgent::QNodeAgent(NodeId node, QNodeInfo info) : Agent(node.str()), node_(std::move(node)), info_(std::move(info)) {}

const std::vector<NodeId>& QNodeAgent::my_path(const Local& s) const {
  return s.arm == 0 ? s.paths.path_1 : s.paths.path_2;
}

const NodeId& QNodeAgent::peer(const Local& s) const { return s.arm == 0 ? s.paths.qnode_2 : s.paths.qnode_1; }

RngStream& QNodeAgent::stream(SessionId id, std::string_view what, AgentContext& ctx) const {
  return ctx.rng("s" + std::to_string(id) + "/" + std::string(what));
}

double QNodeAgent::true_coincidence_rate(const Local& s, const World& world) const {
  const auto& d1 = world.baseline().node(s.paths.qnode_1).qnode().detector;
  const auto& d2 = world.baseline().node(s.paths.qnode_2).qnode().detector;
  return expected_coincidences(s.paths.pair_rate_hz, transmittance_from_loss(world.path_loss_db(s.paths.path_1)),
                               transmittance_from_loss(world.path_loss_db(s.paths.path_2)), d1, d2, 1.0);
}

double QNodeAgent::expected_coincidence_rate(const Local& s) const {
  // from the classical loss estimates; callers apply detector efficiencies
  return s.paths.pair_rate_hz * transmittance_from_loss(std::max(0.0, s.probe.est_loss_1_db)).eta *
         transmittance_from_loss(std::max(0.0, s.probe.est_loss_2_db)).eta;
}

void QNodeAgent::on_message(const Message& msg, AgentContext& ctx) {
  const SessionId id = msg.session;
  if (msg.kind == MsgKind::PathsEstablished && msg.has<PathsBody>()) {
    Local s;
    s.paths = msg.body<PathsBody>();
    s.arm = s.paths.qnode_1 == node_ ? 0 : 1;
    s.token = next_token_++;
    sessions_[id] = std::move(s);
    return;
  }
  auto it = sessions_.find(id);
  if (it == sessions_.end() || msg.attempt != it->second.paths.attempt) return;
  Local& s = it->second;
  const World& world = ctx.world();
  const SimConfig& cfg = ctx.config();

  switch (msg.kind) {
    case MsgKind::ProbeClassical: {
      if (!msg.has<PowerBody>()) return;
      PowerBody p = msg.body<PowerBody>();
      const double loss = world.path_loss_db(my_path(s));
      p.measured_dbm = std::isinf(loss) ? -200.0
                                        : measure_power_dbm(p.injected_dbm, loss, cfg.power_noise_sigma_db,
                                                            stream(id, "power", ctx));
      reply(s, ctx, out(MsgKind::ClassicalPowerReport, kControllerId, id, p));
      return;
    }
    case MsgKind::ProbeQuantum:
      if (!msg.has<ProbeBody>()) return;
      s.probe = msg.body<ProbeBody>();
      // source on for one window, then off for the noise window
      ctx.set_timer(seconds_to_ns(2.0 * s.probe.duration_s), Timer{"quantum", id, s.token});
      return;
    case MsgKind::SendAlignment: {
      if (!msg.has<AlignBody>()) return;
      const bool phase = msg.body<AlignBody>().basis == "phase";
      AlignmentConfig ac;
      if (phase) {
        ac.grid_step = 2.0 * std::numbers::pi / 100.0;
        ac.tolerance = ac.grid_step;
      }
      if (std::isinf(world.path_loss_db(my_path(s)))) {
        s.pending_alignment = AlignmentResult{false, "no_light", 0.0, 1};
      } else if (phase) {
        s.pending_alignment = calibrate_phase(phase_rad_, world.phase_rad(node_), ac);
        if (s.pending_alignment.ok) phase_rad_ = s.pending_alignment.setting;
      } else {
        s.pending_alignment = calibrate_polarization(analyzer_deg_, world.polarization_deg(node_), ac);
        if (s.pending_alignment.ok) analyzer_deg_ = s.pending_alignment.setting;
      }
      ctx.set_timer(seconds_to_ns(s.pending_alignment.iterations * cfg.alignment_step_s),
                    Timer{"align", id, s.token});
      return;
    }
    case MsgKind::SendEarlyLate: {
      if (!msg.has<EarlyLateBody>()) return;
      (msg.body<EarlyLateBody>().which == "early" ? s.early_seen : s.late_seen) = true;
      if (!(s.early_seen && s.late_seen)) return;
      s.early_seen = s.late_seen = false;
      if (std::isinf(world.path_loss_db(my_path(s)))) {
        reply(s, ctx, out(MsgKind::AlignmentFailed, kControllerId, id, CauseBody{"no_light"}));
        return;
      }
      const auto bins = identify_bins(world.early_arrival_s(node_), world.bin_separation_s(node_), info_.detector,
                                      cfg.bins_photons, stream(id, "bins", ctx));
      if (bins.ok)
        reply(s, ctx, out(MsgKind::BinsIdentified, kControllerId, id, BinsBody{bins.early, bins.late}));
      else
        reply(s, ctx, out(MsgKind::AlignmentFailed, kControllerId, id, CauseBody{bins.cause}));
      return;
    }
    case MsgKind::DelayRange:
      if (!msg.has<RangeBody>()) return;
      s.range = msg.body<RangeBody>();
      s.sync_started = false;
      if (s.arm == 0) {
        RngStream& rng = stream(id, "records", ctx);
        RecordsBody batch;
        for (int i = 0; i < 10; ++i)
          batch.records.push_back(DetectionRecord{node_, rng.uniform_int(0, 1 << 20), s.paths.basis,
                                                  static_cast<int>(rng() >> 63)});
        reply(s, ctx, out(MsgKind::DetectionRecord, peer(s).str(), id, batch));
        reply(s, ctx, out(MsgKind::Ready, kControllerId, id));
      } else if (s.records_received) {
        start_sync(id, s, ctx);
      }
      return;
    case MsgKind::DetectionRecord:
      if (s.arm != 1) return;
      s.records_received = true;
      if (s.range) start_sync(id, s, ctx);
      return;
    case MsgKind::Distributing:
      s.distributing = true;
      if (s.arm != 1) return;
      if (!s.run_started) {
        s.run = EntangleRun(s.paths.target_ebits, s.paths.end_time, info_.detector.time_bin_width_s);
        s.run_started = true;
      }
      s.token = next_token_++;
      next_chunk(id, s, ctx);
      return;
    case MsgKind::End: {
      SummaryBody summary = msg.has<SummaryBody>() ? msg.body<SummaryBody>() : SummaryBody{};
      if (s.arm == 1) stored_[id] = s.run.log();
      reply(s, ctx, out(MsgKind::ResultsPosted, kControllerId, id, summary));
      sessions_.erase(it);
      return;
    }
    case MsgKind::Abort:
      sessions_.erase(it);
      return;
    default:
      return;
  }
}

void QNodeAgent::start_sync(SessionId id, Local& s, AgentContext& ctx) {
  if (s.sync_started) return;
  s.sync_started = true;
  s.records_received = false;
  reply(s, ctx, out(MsgKind::BitSyncDone, kControllerId, id));

  const World& world = ctx.world();
  const auto& d1 = world.baseline().node(s.paths.qnode_1).qnode().detector;
  const auto& d2 = world.baseline().node(s.paths.qnode_2).qnode().detector;
  const auto singles = [&](const std::vector<NodeId>& path, const DetectorModel& d) {
    return expected_singles(s.paths.pair_rate_hz, transmittance_from_loss(world.path_loss_db(path)), d, 1.0);
  };
  DelayScanModel model;
  model.signal_rate_hz = true_coincidence_rate(s, world);
  model.accidental_rate_hz =
      expected_accidentals(singles(s.paths.path_1, d1), singles(s.paths.path_2, d2), info_.detector.time_bin_width_s, 1.0);
  model.expected_signal_rate_hz = expected_coincidence_rate(s) * d1.efficiency * d2.efficiency;
  const std::int64_t truth = s.paths.nominal_offset + world.delay_residual(id);
  s.sync = bit_level_sync(truth, *s.range, model, stream(id, "sync", ctx));
  ctx.set_timer(seconds_to_ns(s.sync.elapsed_s), Timer{"sync", id, s.token});
}

void QNodeAgent::next_chunk(SessionId id, Local& s, AgentContext& ctx) {
  const SimTime now = ctx.now();
  const SimTime end = s.run.end_time();
  if (now >= end) {
    finish(id, s, s.run.done(), ctx);
    return;
  }
  const SimTime to = std::min(end, now + seconds_to_ns(ctx.config().duty_cycle_s));
  s.cycle_start = now;
  s.cycle_start_count = s.run.log().size();
  const auto reached = s.run.advance(now, to, true_coincidence_rate(s, ctx.world()), stream(id, "ebits", ctx));
  if (reached)
    ctx.set_timer(*reached - now, Timer{"target", id, s.token});
  else
    ctx.set_timer(to - now, Timer{"cycle", id, s.token});
}

void QNodeAgent::finish(SessionId id, Local& s, bool complete, AgentContext& ctx) {
  s.distributing = false;
  s.token = next_token_++;
  reply(s, ctx, out(MsgKind::End, kControllerId, id, SummaryBody{s.run.log().size(), complete}));
}

void QNodeAgent::on_timer(const Timer& timer, AgentContext& ctx) {
  auto it = sessions_.find(timer.session);
  if (it == sessions_.end() || it->second.token != timer.token) return;
  Local& s = it->second;
  const SessionId id = timer.session;
  const World& world = ctx.world();

  if (timer.kind == "quantum") {
    const double est = s.arm == 0 ? s.probe.est_loss_1_db : s.probe.est_loss_2_db;
    const double expected = expected_signal_clicks(s.paths.pair_rate_hz, transmittance_from_loss(std::max(0.0, est)),
                                                   info_.detector, s.probe.duration_s);
    CountModel model;
    model.pair_rate_hz = s.paths.pair_rate_hz;
    model.eta = transmittance_from_loss(world.path_loss_db(my_path(s)));
    model.detector = info_.detector;
    model.leakage_hz = world.leakage_hz(node_);
    model.duration_s = s.probe.duration_s;
    const CountSample sample = sample_counts(model, stream(id, "counts", ctx));
    QuantumCheckConfig qc;
    qc.noise_threshold = ctx.config().noise_threshold;
    qc.loss_estimate_sigma_db = ctx.config().power_noise_sigma_db;
    const auto v = verify_path_quantum(sample, expected, qc);
    if (v.ok)
      reply(s, ctx, out(MsgKind::PathVerified, kControllerId, id));
    else
      reply(s, ctx, out(MsgKind::PathVerifyFailed, kControllerId, id, CauseBody{v.cause}));
  } else if (timer.kind == "align") {
    if (s.pending_alignment.ok)
      reply(s, ctx, out(MsgKind::AlignmentDone, kControllerId, id, AlignBody{"", s.pending_alignment.setting}));
    else
      reply(s, ctx, out(MsgKind::AlignmentFailed, kControllerId, id, CauseBody{s.pending_alignment.cause}));
  } else if (timer.kind == "sync") {
    if (s.sync.ok) {
      reply(s, ctx, out(MsgKind::SyncDone, kControllerId, id, SyncBody{s.sync.offset, s.sync.elapsed_s}));
      reply(s, ctx, out(MsgKind::Ready, kControllerId, id));
    } else {
      reply(s, ctx, out(MsgKind::SyncFailed, kControllerId, id, CauseBody{"sync"}));
    }
  } else if (timer.kind == "target") {
    finish(id, s, true, ctx);
  } else if (timer.kind == "cycle") {
    if (ctx.now() >= s.run.end_time()) {
      finish(id, s, s.run.done(), ctx);
      return;
    }
    // start of a new duty cycle: compare the last cycle against expectation
    const double expected = expected_coincidence_rate(s) *
                            world.baseline().node(s.paths.qnode_1).qnode().detector.efficiency *
                            world.baseline().node(s.paths.qnode_2).qnode().detector.efficiency *
                            ns_to_seconds(ctx.now() - s.cycle_start);
    const double observed = static_cast<double>(s.run.log().size() - s.cycle_start_count);
    if (expected > 0.0 && observed < expected - 3.0 * std::sqrt(expected)) {
      s.distributing = false;
      s.token = next_token_++;
      reply(s, ctx, out(MsgKind::CalibrationLost, kControllerId, id, CauseBody{"low_coincidence_rate"}));
      return;
    }
    next_chunk(id, s, ctx);
  }
}

EpsAgent::EpsAgent(NodeId node, EpsInfo info) : Agent(node.str()), node_(std::move(node)), info_(std::move(info)) {}

bool EpsAgent::distributing(SessionId s) const {
  auto it = sessions_.find(s);
  return it != sessions_.end() && it->second.distributing;
}

void EpsAgent::on_message(const Message& msg, AgentContext& ctx) {
  const SessionId id = msg.session;
  if (msg.kind == MsgKind::PathsEstablished && msg.has<PathsBody>()) {
    Local& s = sessions_[id];
    s = Local{msg.body<PathsBody>(), false};
    const double p = ctx.config().injected_power_dbm;
    reply(s, ctx, out(MsgKind::ProbeClassical, s.paths.qnode_1.str(), id, PowerBody{1, p, 0.0}));
    reply(s, ctx, out(MsgKind::ProbeClassical, s.paths.qnode_2.str(), id, PowerBody{2, p, 0.0}));
    return;
  }
  auto it = sessions_.find(id);
  if (it == sessions_.end() || msg.attempt != it->second.paths.attempt) return;
  Local& s = it->second;
  const auto both = [&](MsgKind kind, const Payload& payload) {
    reply(s, ctx, out(kind, s.paths.qnode_1.str(), id, payload));
    reply(s, ctx, out(kind, s.paths.qnode_2.str(), id, payload));
  };
  switch (msg.kind) {
    case MsgKind::ProbeQuantum:
    case MsgKind::SendAlignment:
    case MsgKind::SendEarlyLate:
      s.distributing = false;
      both(msg.kind, msg.payload);
      return;
    case MsgKind::CalibPairs:
      reply(s, ctx, out(MsgKind::Ready, kControllerId, id));
      return;
    case MsgKind::Start:
      s.distributing = true;
      both(MsgKind::Distributing, {});
      return;
    case MsgKind::End:
    case MsgKind::Abort:
      sessions_.erase(it);
      return;
    default:
      return;
  }
}

SwitchAgent::SwitchAgent(NodeId node, std::vector<Node> neighborhood, std::vector<Link> links)
    : Agent(node.str()), node_(std::move(node)), neighborhood_(std::move(neighborhood)), links_(std::move(links)) {}

bool SwitchAgent::port_in_use(int port) const {
  return std::any_of(cross_connects_.begin(), cross_connects_.end(),
                     [&](const CrossConnect& c) { return c.in_port == port || c.out_port == port; });
}

void SwitchAgent::on_message(const Message& msg, AgentContext& ctx) {
  switch (msg.kind) {
    case MsgKind::DiscoverQuery:
      ctx.send(out(MsgKind::DiscoverReply, msg.sender, 0, DiscoverBody{node_, neighborhood_, links_}));
      return;
    case MsgKind::Connect:
      if (!msg.has<CrossConnectBody>()) return;
      for (const auto& cc : msg.body<CrossConnectBody>().cross_connects) {
        if (cc.switch_id != node_) continue;
        if (port_in_use(cc.in_port) || port_in_use(cc.out_port)) {
          ++conflicts_;
          continue;
        }
        cross_connects_.push_back(cc);
      }
      return;
    case MsgKind::Disconnect:
      std::erase_if(cross_connects_, [&](const CrossConnect& c) { return c.session == msg.session; });
      return;
    default:
      return;
  }
}

SwitchAgent make_switch_agent(const Topology& topology, const NodeId& switch_id) {
  std::vector<Node> hood{topology.node(switch_id)};
  std::vector<Link> links;
  for (const auto& [nb, link] : topology.neighbors(switch_id)) {
    hood.push_back(topology.node(nb));
    links.push_back(*link);
  }
  return SwitchAgent(switch_id, std::move(hood), std::move(links));
}

}  // namespace qnet
