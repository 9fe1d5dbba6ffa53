#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qnet/rwa.hpp"
#include "qnet/topology.hpp"

namespace qnet {

/// Simulated time in integer nanoseconds.
using SimTime = std::int64_t;

SimTime seconds_to_ns(double seconds);
double ns_to_seconds(SimTime ns);

inline const std::string kControllerId = "controller";

struct EntanglementRequest {
  QubitEncoding qubit_type = QubitEncoding::Polarization;
  SimTime start_time = 0;
  SimTime end_time = 0;
  NodeId qnode_1;
  NodeId qnode_2;
  std::string calib_basis;
  std::uint64_t target_ebits = 1000;

  bool operator==(const EntanglementRequest&) const = default;
};

/// Measurement bases accepted for calibration, per encoding.
const std::vector<std::string>& bases_for(QubitEncoding encoding);

struct DetectionRecord {
  NodeId node;
  std::int64_t clock_tick = 0;
  std::string basis;
  int outcome = 0;

  bool operator==(const DetectionRecord&) const = default;
};

struct EBit {
  std::int64_t tick = 0;
  int outcome_1 = 0;
  int outcome_2 = 0;

  bool operator==(const EBit&) const = default;
};

enum class MsgKind {
  Request,
  Reject,
  Accept,
  RouteBlocked,
  PathsEstablished,
  Connect,
  Disconnect,
  ProbeClassical,
  ClassicalPowerReport,
  ProbeQuantum,
  PathVerified,
  PathVerifyFailed,
  SendAlignment,
  AlignmentDone,
  AlignmentFailed,
  SendEarlyLate,
  BinsIdentified,
  DelayRange,
  CalibPairs,
  DetectionRecord,
  BitSyncDone,
  SyncDone,
  SyncFailed,
  Ready,
  Start,
  Distributing,
  CalibrationLost,
  End,
  ResultsPosted,
  Abort,
  Timeout,
  DiscoverQuery,
  DiscoverReply,
};
inline constexpr int kMsgKindCount = static_cast<int>(MsgKind::DiscoverReply) + 1;

std::string_view to_string(MsgKind kind);

struct RequestBody {
  EntanglementRequest request;
};
struct CauseBody {
  std::string cause;
};
struct PathsBody {
  NodeId eps;
  NodeId qnode_1;
  NodeId qnode_2;
  std::vector<NodeId> path_1;
  std::vector<NodeId> path_2;
  std::string signal;
  std::string idler;
  int endpoint_1 = 0;
  int endpoint_2 = 0;
  double loss_1_db = 0.0;  // predicted by the controller's view
  double loss_2_db = 0.0;
  double pair_rate_hz = 0.0;
  QubitEncoding encoding = QubitEncoding::Polarization;
  std::string basis;
  SimTime end_time = 0;
  std::uint64_t target_ebits = 0;
  std::int64_t nominal_offset = 0;  // ticks, arm 2 relative to arm 1
  int attempt = 0;
};
struct PowerBody {
  int arm = 0;
  double injected_dbm = 0.0;
  double measured_dbm = 0.0;
};
struct ProbeBody {
  double est_loss_1_db = 0.0;
  double est_loss_2_db = 0.0;
  double duration_s = 1.0;
};
struct AlignBody {
  std::string basis;  // measurement basis, or "phase" for an interferometer
  double value = 0.0; // reported setting (degrees or radians)
};
struct EarlyLateBody {
  std::string which;  // early | late
};
struct BinsBody {
  std::int64_t early = 0;
  std::int64_t late = 0;
};
struct RangeBody {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};
struct RecordsBody {
  std::vector<DetectionRecord> records;
};
struct SyncBody {
  std::int64_t offset = 0;
  double elapsed_s = 0.0;
};
struct SummaryBody {
  std::uint64_t ebits = 0;
  bool complete = true;
};
struct CrossConnectBody {
  std::vector<CrossConnect> cross_connects;
};
struct DiscoverBody {
  NodeId switch_id;
  std::vector<Node> nodes;  // the switch itself and every neighbor
  std::vector<Link> links;  // every incident link
};

using Payload = std::variant<std::monostate, RequestBody, CauseBody, PathsBody, PowerBody, ProbeBody, AlignBody,
                             EarlyLateBody, BinsBody, RangeBody, RecordsBody, SyncBody, SummaryBody,
                             CrossConnectBody, DiscoverBody>;

struct Message {
  MsgKind kind = MsgKind::Request;
  std::string sender;
  std::string receiver;
  SessionId session = 0;  // 0 = not session scoped
  int attempt = 0;        // routing attempt of the session this belongs to
  SimTime sent_at = 0;
  Payload payload;

  template <typename T>
  const T& body() const {
    return std::get<T>(payload);
  }
  template <typename T>
  bool has() const {
    return std::holds_alternative<T>(payload);
  }
};

Message make_message(MsgKind kind, std::string sender, std::string receiver, SessionId session,
                     Payload payload = {});

/// `<time> <sender> -> <receiver> <session|-> <Kind> [payload]`
std::string format_trace_line(SimTime at, const Message& msg);
std::string format_time(SimTime t);
std::string format_payload(const Payload& payload);

}  // namespace qnet
