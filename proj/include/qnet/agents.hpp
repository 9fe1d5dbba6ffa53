#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "qnet/config.hpp"
#include "qnet/messages.hpp"
#include "qnet/procedures.hpp"
#include "qnet/rng.hpp"
#include "qnet/world.hpp"

namespace qnet {

struct Timer {
  std::string kind;
  SessionId session = 0;
  std::uint64_t token = 0;
};

/// What an agent may do while handling an event. Implemented by the kernel;
/// tests substitute a recording fake.
class AgentContext {
 public:
  virtual ~AgentContext() = default;
  virtual SimTime now() const = 0;
  /// Queues `msg` for delivery over the classical network. sender and
  /// sent_at are filled in by the context.
  virtual void send(Message msg) = 0;
  virtual void set_timer(SimTime delay, Timer timer) = 0;
  /// Named random stream private to the calling agent.
  virtual RngStream& rng(std::string_view name) = 0;
  virtual const World& world() const = 0;
  virtual const SimConfig& config() const = 0;
};

class Agent {
 public:
  explicit Agent(std::string id) : id_(std::move(id)) {}
  virtual ~Agent() = default;

  const std::string& id() const { return id_; }

  virtual void on_start(AgentContext&) {}
  virtual void on_message(const Message& msg, AgentContext& ctx) = 0;
  virtual void on_timer(const Timer&, AgentContext&) {}
  /// A message this agent sent could not be delivered.
  virtual void on_delivery_failure(const Message&, AgentContext&) {}

 protected:
  Message out(MsgKind kind, const std::string& to, SessionId session, Payload payload = {}) const {
    return make_message(kind, id_, to, session, std::move(payload));
  }

 private:
  std::string id_;
};

class QNodeAgent : public Agent {
 public:
  QNodeAgent(NodeId node, QNodeInfo info);

  void on_message(const Message& msg, AgentContext& ctx) override;
  void on_timer(const Timer& timer, AgentContext& ctx) override;

  double analyzer_deg() const { return analyzer_deg_; }
  double phase_rad() const { return phase_rad_; }
  /// Completed e-bit logs kept locally, by session.
  const std::map<SessionId, std::vector<EBit>>& stored_logs() const { return stored_; }
  bool has_session(SessionId s) const { return sessions_.contains(s); }

 private:
  struct Local {
    PathsBody paths;
    int arm = 0;
    std::uint64_t token = 0;
    ProbeBody probe;
    AlignmentResult pending_alignment;
    bool early_seen = false;
    bool late_seen = false;
    std::optional<RangeBody> range;
    bool records_received = false;
    bool sync_started = false;
    SyncResult sync;
    EntangleRun run;
    bool run_started = false;
    bool distributing = false;
    std::size_t cycle_start_count = 0;
    SimTime cycle_start = 0;
  };

  const std::vector<NodeId>& my_path(const Local& s) const;
  const NodeId& peer(const Local& s) const;
  double true_coincidence_rate(const Local& s, const World& world) const;
  double expected_coincidence_rate(const Local& s) const;
  void start_sync(SessionId id, Local& s, AgentContext& ctx);
  void next_chunk(SessionId id, Local& s, AgentContext& ctx);
  void finish(SessionId id, Local& s, bool complete, AgentContext& ctx);
  RngStream& stream(SessionId id, std::string_view what, AgentContext& ctx) const;

  NodeId node_;
  QNodeInfo info_;
  double analyzer_deg_ = 0.0;
  double phase_rad_ = 0.0;
  std::uint64_t next_token_ = 1;
  std::map<SessionId, Local> sessions_;
  std::map<SessionId, std::vector<EBit>> stored_;
};

class EpsAgent : public Agent {
 public:
  EpsAgent(NodeId node, EpsInfo info);

  void on_message(const Message& msg, AgentContext& ctx) override;
  bool has_session(SessionId s) const { return sessions_.contains(s); }
  bool distributing(SessionId s) const;

 private:
  struct Local {
    PathsBody paths;
    bool distributing = false;
  };
  NodeId node_;
  EpsInfo info_;
  std::map<SessionId, Local> sessions_;
};

/// Programmable optical switch: holds cross-connects and answers discovery.
class SwitchAgent : public Agent {
 public:
  /// `local_view` is the switch's own knowledge: itself, its neighbors and
  /// its incident links.
  SwitchAgent(NodeId node, std::vector<Node> neighborhood, std::vector<Link> links);

  void on_message(const Message& msg, AgentContext& ctx) override;

  const std::vector<CrossConnect>& cross_connects() const { return cross_connects_; }
  std::size_t port_conflicts() const { return conflicts_; }

 private:
  bool port_in_use(int port) const;

  NodeId node_;
  std::vector<Node> neighborhood_;
  std::vector<Link> links_;
  std::vector<CrossConnect> cross_connects_;
  std::size_t conflicts_ = 0;
};

/// Builds a switch agent's local view from a topology.
SwitchAgent make_switch_agent(const Topology& topology, const NodeId& switch_id);

}  // namespace qnet
