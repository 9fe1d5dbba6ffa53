#include "qnet/messages.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace qnet {

SimTime seconds_to_ns(double seconds) {
  if (!std::isfinite(seconds)) throw Error("non-finite time");
  return static_cast<SimTime>(std::llround(seconds * 1e9));
}

double ns_to_seconds(SimTime ns) { return static_cast<double>(ns) * 1e-9; }

const std::vector<std::string>& bases_for(QubitEncoding encoding) {
  static const std::vector<std::string> pol{"HV", "DA"};
  static const std::vector<std::string> tb{"Z", "X"};
  return encoding == QubitEncoding::Polarization ? pol : tb;
}

std::string_view to_string(MsgKind kind) {
  switch (kind) {
    case MsgKind::Request: return "Request";
    case MsgKind::Reject: return "Reject";
    case MsgKind::Accept: return "Accept";
    case MsgKind::RouteBlocked: return "RouteBlocked";
    case MsgKind::PathsEstablished: return "PathsEstablished";
    case MsgKind::Connect: return "Connect";
    case MsgKind::Disconnect: return "Disconnect";
    case MsgKind::ProbeClassical: return "ProbeClassical";
    case MsgKind::ClassicalPowerReport: return "ClassicalPowerReport";
    case MsgKind::ProbeQuantum: return "ProbeQuantum";
    case MsgKind::PathVerified: return "PathVerified";
    case MsgKind::PathVerifyFailed: return "PathVerifyFailed";
    case MsgKind::SendAlignment: return "SendAlignment";
    case MsgKind::AlignmentDone: return "AlignmentDone";
    case MsgKind::AlignmentFailed: return "AlignmentFailed";
    case MsgKind::SendEarlyLate: return "SendEarlyLate";
    case MsgKind::BinsIdentified: return "BinsIdentified";
    case MsgKind::DelayRange: return "DelayRange";
    case MsgKind::CalibPairs: return "CalibPairs";
    case MsgKind::DetectionRecord: return "DetectionRecord";
    case MsgKind::BitSyncDone: return "BitSyncDone";
    case MsgKind::SyncDone: return "SyncDone";
    case MsgKind::SyncFailed: return "SyncFailed";
    case MsgKind::Ready: return "Ready";
    case MsgKind::Start: return "Start";
    case MsgKind::Distributing: return "Distributing";
    case MsgKind::CalibrationLost: return "CalibrationLost";
    case MsgKind::End: return "End";
    case MsgKind::ResultsPosted: return "ResultsPosted";
    case MsgKind::Abort: return "Abort";
    case MsgKind::Timeout: return "Timeout";
    case MsgKind::DiscoverQuery: return "DiscoverQuery";
    case MsgKind::DiscoverReply: return "DiscoverReply";
  }
  return "?";
}

Message make_message(MsgKind kind, std::string sender, std::string receiver, SessionId session, Payload payload) {
  Message m;
  m.kind = kind;
  m.sender = std::move(sender);
  m.receiver = std::move(receiver);
  m.session = session;
  m.payload = std::move(payload);
  return m;
}

std::string format_time(SimTime t) {
  char buf[40];
  const bool neg = t < 0;
  const unsigned long long a = neg ? static_cast<unsigned long long>(-t) : static_cast<unsigned long long>(t);
  std::snprintf(buf, sizeof buf, "%s%llu.%09llu", neg ? "-" : "", a / 1000000000ULL, a % 1000000000ULL);
  return buf;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string join_path(const std::vector<NodeId>& nodes) {
  std::string out;
  for (const auto& n : nodes) {
    if (!out.empty()) out += ',';
    out += n.str();
  }
  return out;
}

struct PayloadFormatter {
  std::string operator()(const std::monostate&) const { return ""; }
  std::string operator()(const RequestBody& b) const {
    const auto& r = b.request;
    return "qubit=" + std::string(to_string(r.qubit_type)) + " from=" + r.qnode_1.str() + " to=" + r.qnode_2.str() +
           " basis=" + r.calib_basis + " start=" + format_time(r.start_time) + " end=" + format_time(r.end_time) +
           " ebits=" + std::to_string(r.target_ebits);
  }
  std::string operator()(const CauseBody& b) const { return "cause=" + b.cause; }
  std::string operator()(const PathsBody& b) const {
    return "eps=" + b.eps.str() + " signal=" + b.signal + " idler=" + b.idler + " path1=" + join_path(b.path_1) +
           " path2=" + join_path(b.path_2) + " loss1=" + fmt(b.loss_1_db) + " loss2=" + fmt(b.loss_2_db);
  }
  std::string operator()(const PowerBody& b) const {
    return "arm=" + std::to_string(b.arm) + " injected=" + fmt(b.injected_dbm) + " measured=" + fmt(b.measured_dbm);
  }
  std::string operator()(const ProbeBody& b) const {
    return "est1=" + fmt(b.est_loss_1_db) + " est2=" + fmt(b.est_loss_2_db) + " duration=" + fmt(b.duration_s);
  }
  std::string operator()(const AlignBody& b) const { return "basis=" + b.basis + " value=" + fmt(b.value); }
  std::string operator()(const EarlyLateBody& b) const { return "which=" + b.which; }
  std::string operator()(const BinsBody& b) const {
    return "early=" + std::to_string(b.early) + " late=" + std::to_string(b.late);
  }
  std::string operator()(const RangeBody& b) const {
    return "lo=" + std::to_string(b.lo) + " hi=" + std::to_string(b.hi);
  }
  std::string operator()(const RecordsBody& b) const { return "records=" + std::to_string(b.records.size()); }
  std::string operator()(const SyncBody& b) const {
    return "offset=" + std::to_string(b.offset) + " elapsed=" + fmt(b.elapsed_s);
  }
  std::string operator()(const SummaryBody& b) const {
    return "ebits=" + std::to_string(b.ebits) + (b.complete ? " complete" : " incomplete");
  }
  std::string operator()(const CrossConnectBody& b) const {
    std::string out;
    for (const auto& cc : b.cross_connects) {
      if (!out.empty()) out += ' ';
      out += std::to_string(cc.in_port) + ">" + std::to_string(cc.out_port);
    }
    return out;
  }
  std::string operator()(const DiscoverBody& b) const {
    return "switch=" + b.switch_id.str() + " nodes=" + std::to_string(b.nodes.size()) +
           " links=" + std::to_string(b.links.size());
  }
};

}  // namespace

std::string format_payload(const Payload& payload) { return std::visit(PayloadFormatter{}, payload); }

std::string format_trace_line(SimTime at, const Message& msg) {
  std::string line = format_time(at);
  line += ' ';
  line += msg.sender;
  line += " -> ";
  line += msg.receiver;
  line += ' ';
  line += msg.session == 0 ? std::string("-") : std::to_string(msg.session);
  line += ' ';
  line += to_string(msg.kind);
  const std::string p = format_payload(msg.payload);
  if (!p.empty()) {
    line += ' ';
    line += p;
  }
  return line;
}

}  // namespace qnet
