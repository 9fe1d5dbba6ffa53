#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qnet/messages.hpp"

namespace qnet {

enum class SessionPhase {
  Requested,
  Routing,
  PathsNotified,
  VerifyClassical,
  VerifyQuantum,
  CalibAlignment,
  CalibBitSync,
  CalibDelayScan,
  Ready,
  Entangling,
  Ending,
  Complete,
  Rejected,
  Failed,
};
inline constexpr int kSessionPhaseCount = static_cast<int>(SessionPhase::Failed) + 1;

std::string_view to_string(SessionPhase phase);
bool is_terminal(SessionPhase phase);

struct SessionConfig {
  int max_retries = 3;
  double power_tolerance_db = 1.0;
  double probe_duration_s = 1.0;
};

/// Everything step_state needs to know about a session besides its state.
struct SessionContext {
  SessionId id = 0;
  EntanglementRequest request;
  NodeId eps;  // set once paths are established
  std::array<double, 2> predicted_loss_db{};
  RangeBody delay_range;
  SessionConfig config;
};

struct SessionState {
  SessionPhase phase = SessionPhase::Requested;
  int retry_count = 0;
  std::string cause;  // Rejected / Failed cause

  // per-arm progress within the current phase group
  std::array<bool, 2> classical_ok{};
  std::array<double, 2> est_loss_db{};
  std::array<bool, 2> verified{};
  std::array<bool, 2> bins{};
  std::array<bool, 2> aligned{};
  std::array<bool, 2> results{};
  // Ready notifications from Q-node-1, Q-node-2, EPS
  std::array<bool, 3> ready{};
  bool synced = false;
  bool complete = true;  // cleared when the run ended short of its target
  std::uint64_t ebits = 0;

  bool operator==(const SessionState&) const = default;
};

struct StepResult {
  SessionState state;
  std::vector<Message> emitted;
  bool violation = false;  // the message was not valid in the phase
};

/// Pure transition function of the per-session protocol, driven from the
/// controller's side. Messages from the controller itself (Accept, Reject,
/// PathsEstablished, RouteBlocked, Start, Timeout) are decisions; all other
/// kinds arrive from the session's entities. Unexpected messages send the
/// session to Failed(protocol_violation). Terminal sessions ignore input.
StepResult step_state(const SessionState& state, const SessionContext& ctx, const Message& msg);

/// Phase label used in outputs, e.g. `Failed(timeout)`.
std::string describe(const SessionState& state);

}  // namespace qnet
