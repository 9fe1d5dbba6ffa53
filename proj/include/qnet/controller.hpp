#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qnet/agents.hpp"
#include "qnet/rwa.hpp"
#include "qnet/session.hpp"

namespace qnet {

/// Assembles a topology from discovery replies (union of reported nodes and
/// links). Throws TopologyValidationError if the union is not a valid graph.
Topology discover_topology(const std::vector<DiscoverBody>& replies);

struct SessionRecord {
  SessionId id = 0;
  EntanglementRequest request;
  std::string final_state;
  std::uint64_t ebits = 0;
  int retries = 0;
  double duration_s = 0.0;
  std::uint64_t messages = 0;
};

/// Append-only store of finished sessions; each id may be written once.
class ResultStore {
 public:
  void post(SessionRecord record);
  const std::map<SessionId, SessionRecord>& records() const { return records_; }
  bool contains(SessionId id) const { return records_.contains(id); }

 private:
  std::map<SessionId, SessionRecord> records_;
};

class DuplicateResultError : public Error {
 public:
  using Error::Error;
};

struct LinkStatus {
  double baseline_db = 0.0;
  double current_db = 0.0;
  bool degraded = false;
  bool down = false;
};

struct EpsChoice {
  NodeId eps;
  PairAssignment assignment;
};

/// EPS choice policy: among sources supporting `encoding` that can serve the
/// pair, the one minimizing the worse arm loss (ties by EPS id). Dry runs
/// only; `ledger` is not modified. On failure returns the furthest blocking
/// cause seen (NoPath when no source supports the encoding).
std::variant<EpsChoice, Blocked> select_eps(const Topology& topology, const ChannelLedger& ledger,
                                            const NodeId& q1, const NodeId& q2, QubitEncoding encoding,
                                            const RouteMetric& metric, std::size_t k_paths = 0);

class ControllerAgent : public Agent {
 public:
  explicit ControllerAgent(std::vector<NodeId> switch_agents);

  /// Discovery is deferred until the first request arrives.
  void on_start(AgentContext& ctx) override;
  void on_message(const Message& msg, AgentContext& ctx) override;
  void on_timer(const Timer& timer, AgentContext& ctx) override;
  void on_delivery_failure(const Message& msg, AgentContext& ctx) override;

  /// Admission of one request at the current time; returns the new session
  /// id (the session may already be Rejected).
  SessionId admit_request(const EntanglementRequest& request, AgentContext& ctx);
  /// Polls link state and refreshes the routing view.
  void monitor_tick(AgentContext& ctx);

  /// Resource-safety sweep: ledger self-consistency, ledger vs. live
  /// sessions, EPS capacity. nullopt when everything holds.
  std::optional<std::string> check_invariants() const;

  bool discovered() const { return discovered_; }
  const Topology& topology() const { return topology_; }
  const ChannelLedger& ledger() const { return ledger_; }
  const ResultStore& results() const { return results_; }
  const std::map<LinkKey, LinkStatus>& link_status() const { return status_; }
  const std::set<NodeId>& unreachable_switches() const { return unreachable_; }

  struct Session {
    SessionContext ctx;
    SessionState state;
    std::optional<PairAssignment> assignment;
    std::uint64_t epoch = 0;
    SimTime created_at = 0;
    std::uint64_t messages = 0;
    int ready_entries = 0;
    int starts = 0;
    bool was_blocked = false;
  };
  const std::map<SessionId, Session>& sessions() const { return sessions_; }

  struct Counters {
    std::uint64_t admitted = 0;
    std::uint64_t rejected = 0;
    std::uint64_t blocked = 0;  // sessions refused or blocked for lack of resources
    std::uint64_t rejected_no_eps = 0;
    std::uint64_t violations = 0;
    std::uint64_t delivery_failures = 0;
    std::uint64_t monitor_ticks = 0;
    std::uint64_t reroutes = 0;
    std::uint64_t ignored = 0;  // messages for unknown sessions
    std::uint64_t stale = 0;    // messages from an abandoned routing attempt
  };
  const Counters& counters() const { return counters_; }
  /// Seconds each link carried at least one assignment's arm, summed over arms.
  const std::map<LinkKey, double>& link_busy_s() const { return busy_s_; }

 private:
  void start_discovery(AgentContext& ctx);
  void finish_discovery(AgentContext& ctx);
  void apply(SessionId id, const Message& msg, AgentContext& ctx);
  void establish(SessionId id, AgentContext& ctx);
  void release(Session& s, AgentContext& ctx);
  void finalize(SessionId id, Session& s, AgentContext& ctx);
  void arm_timeout(SessionId id, Session& s, AgentContext& ctx);
  void ensure_monitor(AgentContext& ctx);
  bool any_active() const;
  RouteMetric routing_metric() const;
  Topology routing_view() const;
  Message internal(MsgKind kind, SessionId id, Payload payload = {}) const;

  std::vector<NodeId> switch_agents_;
  std::vector<DiscoverBody> replies_;
  bool discovering_ = false;
  bool discovered_ = false;
  std::vector<EntanglementRequest> queued_;
  Topology topology_;
  ChannelLedger ledger_;
  std::map<LinkKey, LinkStatus> status_;
  std::set<NodeId> unreachable_;
  std::set<NodeId> down_nodes_;
  std::map<SessionId, Session> sessions_;
  ResultStore results_;
  SessionId next_id_ = 1;
  bool monitor_running_ = false;
  Counters counters_;
  std::map<LinkKey, double> busy_s_;
  std::map<SessionId, SimTime> assigned_at_;
};

}  // namespace qnet
