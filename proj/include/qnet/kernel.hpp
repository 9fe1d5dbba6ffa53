#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <variant>
#include <vector>

#include "qnet/agents.hpp"
#include "qnet/config.hpp"
#include "qnet/world.hpp"

namespace qnet {

class CausalityError : public Error {
 public:
  using Error::Error;
};

struct Delivery {
  Message msg;
};
struct DeliveryFailure {
  Message msg;
};
struct TimerFire {
  Timer timer;
};
struct StartAgent {};
using Action = std::function<void()>;

struct Event {
  SimTime time = 0;
  std::uint64_t sequence = 0;
  std::string target;  // agent id; empty for kernel actions
  std::variant<Delivery, DeliveryFailure, TimerFire, StartAgent, Action> body;
};

struct KernelStats {
  std::uint64_t events = 0;
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t failed = 0;
  std::uint64_t dropped_timers = 0;
  std::map<MsgKind, std::uint64_t> by_kind;
};

/// Single-threaded discrete-event engine. Events run in (time, sequence)
/// order; messages travel the fiber graph at the configured per-km latency
/// and stay FIFO per (sender, receiver) pair.
class Kernel {
 public:
  Kernel(SimConfig config, World& world);
  Kernel(const Kernel&) = delete;
  Kernel& operator=(const Kernel&) = delete;

  /// Registers an agent hosted at `location` (a node of the world topology).
  Agent& add_agent(std::unique_ptr<Agent> agent, NodeId location);
  Agent* find_agent(const std::string& id);

  SimTime now() const { return now_; }
  const SimConfig& config() const { return config_; }
  World& world() { return world_; }

  /// Throws CausalityError when `event.time` is before now.
  void schedule(Event event);
  void schedule_action(SimTime at, Action action);
  /// Sends `msg` from msg.sender at the current time.
  void send(Message msg);
  void set_timer(const std::string& owner, SimTime delay, Timer timer);
  RngStream& rng(const std::string& owner, std::string_view name);

  /// Queues on_start for every agent at the current time, in id order.
  void start_agents();
  /// Processes events with time <= until. Returns the number processed.
  std::uint64_t run(SimTime until);
  bool idle() const { return queue_.empty(); }
  std::size_t pending() const { return queue_.size(); }

  /// Classical distance in km between two agents over nodes that are up.
  std::optional<double> distance_km(const std::string& from, const std::string& to);
  void invalidate_routes() { distance_cache_.clear(); }

  void set_after_event(std::function<void()> hook) { after_event_ = std::move(hook); }
  const std::vector<std::string>& trace() const { return trace_; }
  const KernelStats& stats() const { return stats_; }

 private:
  struct Later {
    bool operator()(const Event& x, const Event& y) const {
      return x.time != y.time ? x.time > y.time : x.sequence > y.sequence;
    }
  };
  class Context;

  void dispatch(Event& event);
  void fail(const Message& msg);
  bool location_up(const std::string& agent) const;

  SimConfig config_;
  World& world_;
  SimTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::map<std::string, std::unique_ptr<Agent>> agents_;
  std::map<std::string, NodeId> location_;
  std::map<std::pair<std::string, std::string>, SimTime> channel_tail_;
  std::map<std::pair<NodeId, NodeId>, std::optional<double>> distance_cache_;
  std::map<std::string, RngStream> streams_;
  std::vector<std::string> trace_;
  KernelStats stats_;
  std::function<void()> after_event_;
};

}  // namespace qnet
