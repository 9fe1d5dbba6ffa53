#include "qnet/kernel.hpp"

#include <cmath>
#include <limits>
#include <set>

namespace qnet {

void SimConfig::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(std::string(name) + " must be positive");
  };
  positive(classical_latency_s_per_km, "classical_latency_s_per_km");
  positive(end_time_s, "end_time");
  positive(timeout_s, "timeout");
  positive(duty_cycle_s, "duty_cycle");
  positive(monitor_interval_s, "monitor_interval");
  positive(fiber_speed_m_per_s, "fiber_speed");
  positive(session.probe_duration_s, "probe_duration");
  if (session.max_retries < 0) throw Error("max_retries must be >= 0");
  if (!(noise_threshold > 0.0)) throw Error("noise_threshold must be positive");
  if (delay_half_range < 0) throw Error("delay_half_range must be >= 0");
  if (retry_backoff_s < 0.0 || alignment_step_s < 0.0) throw Error("negative delay in config");
}

class Kernel::Context final : public AgentContext {
 public:
  Context(Kernel& k, Agent& self) : k_(k), self_(self) {}
  SimTime now() const override { return k_.now_; }
  void send(Message msg) override {
    msg.sender = self_.id();
    k_.send(std::move(msg));
  }
  void set_timer(SimTime delay, Timer timer) override { k_.set_timer(self_.id(), delay, std::move(timer)); }
  RngStream& rng(std::string_view name) override { return k_.rng(self_.id(), name); }
  const World& world() const override { return k_.world_; }
  const SimConfig& config() const override { return k_.config_; }

 private:
  Kernel& k_;
  Agent& self_;
};

Kernel::Kernel(SimConfig config, World& world) : config_(std::move(config)), world_(world) { config_.validate(); }

Agent& Kernel::add_agent(std::unique_ptr<Agent> agent, NodeId location) {
  if (!world_.baseline().has_node(location)) throw Error("agent location " + location.str() + " is not a node");
  const std::string id = agent->id();
  if (agents_.contains(id)) throw Error("duplicate agent " + id);
  location_[id] = std::move(location);
  return *(agents_[id] = std::move(agent));
}

Agent* Kernel::find_agent(const std::string& id) {
  auto it = agents_.find(id);
  return it == agents_.end() ? nullptr : it->second.get();
}

void Kernel::schedule(Event event) {
  if (event.time < now_)
    throw CausalityError("event at " + format_time(event.time) + " scheduled at " + format_time(now_));
  event.sequence = next_seq_++;
  queue_.push(std::move(event));
}

void Kernel::schedule_action(SimTime at, Action action) {
  Event e;
  e.time = at;
  e.body = std::move(action);
  schedule(std::move(e));
}

RngStream& Kernel::rng(const std::string& owner, std::string_view name) {
  const std::string key = owner + "/" + std::string(name);
  auto it = streams_.find(key);
  if (it == streams_.end()) it = streams_.emplace(key, RngStream(config_.master_seed, key)).first;
  return it->second;
}

bool Kernel::location_up(const std::string& agent) const {
  auto it = location_.find(agent);
  return it != location_.end() && !world_.is_down(it->second);
}

std::optional<double> Kernel::distance_km(const std::string& from, const std::string& to) {
  auto a = location_.find(from);
  auto b = location_.find(to);
  if (a == location_.end() || b == location_.end()) return std::nullopt;
  const NodeId& src = a->second;
  const NodeId& dst = b->second;
  if (world_.is_down(src) || world_.is_down(dst)) return std::nullopt;
  if (src == dst) return 0.0;
  auto key = std::make_pair(src, dst);
  if (auto it = distance_cache_.find(key); it != distance_cache_.end()) return it->second;

  const Topology& topo = world_.baseline();
  std::map<NodeId, double> dist{{src, 0.0}};
  std::set<std::pair<double, NodeId>> frontier{{0.0, src}};
  std::optional<double> found;
  while (!frontier.empty()) {
    auto [d, u] = *frontier.begin();
    frontier.erase(frontier.begin());
    if (u == dst) {
      found = d;
      break;
    }
    for (const auto& [v, link] : topo.neighbors(u)) {
      if (world_.is_down(v)) continue;
      const double nd = d + link->length_km;
      auto it = dist.find(v);
      if (it != dist.end() && it->second <= nd) continue;
      if (it != dist.end()) frontier.erase({it->second, v});
      dist[v] = nd;
      frontier.insert({nd, v});
    }
  }
  distance_cache_[key] = found;
  return found;
}

void Kernel::send(Message msg) {
  msg.sent_at = now_;
  ++stats_.sent;
  ++stats_.by_kind[msg.kind];
  trace_.push_back(format_trace_line(now_, msg));
  const auto km = distance_km(msg.sender, msg.receiver);
  if (!km || !agents_.contains(msg.receiver)) {
    fail(msg);
    return;
  }
  SimTime arrival = now_ + seconds_to_ns(*km * config_.classical_latency_s_per_km);
  auto& tail = channel_tail_[{msg.sender, msg.receiver}];
  arrival = std::max(arrival, tail);
  tail = arrival;
  Event e;
  e.time = arrival;
  e.target = msg.receiver;
  e.body = Delivery{std::move(msg)};
  schedule(std::move(e));
}

void Kernel::fail(const Message& msg) {
  Event e;
  e.time = now_;
  e.target = msg.sender;
  e.body = DeliveryFailure{msg};
  schedule(std::move(e));
}

void Kernel::set_timer(const std::string& owner, SimTime delay, Timer timer) {
  if (delay < 0) throw CausalityError("negative timer delay for " + owner);
  Event e;
  e.time = now_ + delay;
  e.target = owner;
  e.body = TimerFire{std::move(timer)};
  schedule(std::move(e));
}

void Kernel::start_agents() {
  for (const auto& [id, agent] : agents_) {
    Event e;
    e.time = now_;
    e.target = id;
    e.body = StartAgent{};
    schedule(std::move(e));
  }
}

void Kernel::dispatch(Event& event) {
  if (auto* action = std::get_if<Action>(&event.body)) {
    (*action)();
    return;
  }
  Agent* agent = find_agent(event.target);
  const bool up = agent && location_up(event.target);
  if (auto* d = std::get_if<Delivery>(&event.body)) {
    if (!up) {
      // receiver died while the message was in flight
      fail(d->msg);
      return;
    }
    ++stats_.delivered;
    Context ctx(*this, *agent);
    agent->on_message(d->msg, ctx);
    return;
  }
  if (auto* f = std::get_if<DeliveryFailure>(&event.body)) {
    ++stats_.failed;
    if (!up) return;
    Context ctx(*this, *agent);
    agent->on_delivery_failure(f->msg, ctx);
    return;
  }
  if (!up) {
    ++stats_.dropped_timers;
    return;
  }
  Context ctx(*this, *agent);
  if (auto* t = std::get_if<TimerFire>(&event.body))
    agent->on_timer(t->timer, ctx);
  else
    agent->on_start(ctx);
}

std::uint64_t Kernel::run(SimTime until) {
  std::uint64_t n = 0;
  while (!queue_.empty() && queue_.top().time <= until) {
    Event e = queue_.top();
    queue_.pop();
    now_ = e.time;
    dispatch(e);
    ++n;
    ++stats_.events;
    if (after_event_) after_event_();
  }
  return n;
}

}  // namespace qnet
