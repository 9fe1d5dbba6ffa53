#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qnet/agents.hpp"

// Records what an agent does instead of scheduling it.
class FakeContext : public qnet::AgentContext {
 public:
  FakeContext(const qnet::World& world, qnet::SimConfig config, std::string self)
      : world_(world), config_(std::move(config)), self_(std::move(self)) {}

  qnet::SimTime now() const override { return now_; }
  void send(qnet::Message msg) override {
    msg.sender = self_;
    msg.sent_at = now_;
    sent.push_back(std::move(msg));
  }
  void set_timer(qnet::SimTime delay, qnet::Timer timer) override { timers.emplace_back(now_ + delay, timer); }
  qnet::RngStream& rng(std::string_view name) override {
    auto key = self_ + "/" + std::string(name);
    auto it = streams_.find(key);
    if (it == streams_.end()) it = streams_.emplace(key, qnet::RngStream(config_.master_seed, key)).first;
    return it->second;
  }
  const qnet::World& world() const override { return world_; }
  const qnet::SimConfig& config() const override { return config_; }

  void advance_to(qnet::SimTime t) { now_ = t; }
  std::vector<qnet::Message> take() { return std::exchange(sent, {}); }

  std::vector<qnet::Message> sent;
  std::vector<std::pair<qnet::SimTime, qnet::Timer>> timers;

 private:
  const qnet::World& world_;
  qnet::SimConfig config_;
  std::string self_;
  qnet::SimTime now_ = 0;
  std::map<std::string, qnet::RngStream> streams_;
};
