#include "qnet/world.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "qnet/rng.hpp"

namespace qnet {

World::World(Topology truth, std::uint64_t seed) : baseline_(std::move(truth)), current_(baseline_), seed_(seed) {}

void World::add_drift(const LinkKey& link, double delta_db) {
  if (!baseline_.find_link(link.a, link.b)) throw Error("drift on unknown link " + link.str());
  drift_[link] += delta_db;
  current_ = baseline_.with_extra_loss(drift_);
}

void World::set_down(const NodeId& node) {
  if (!baseline_.has_node(node)) throw Error("unknown node " + node.str());
  down_.insert(node);
}

double World::leakage_hz(const NodeId& qnode) const {
  auto it = leakage_hz_.find(qnode);
  return it == leakage_hz_.end() ? 0.0 : it->second;
}

double World::path_loss_db(const std::vector<NodeId>& nodes) const {
  for (const auto& n : nodes)
    if (down_.contains(n)) return std::numeric_limits<double>::infinity();
  return qnet::path_loss_db(current_, std::span<const NodeId>(nodes));
}

double World::link_loss_db(const LinkKey& link) const { return current_.link(link.a, link.b).weight(); }

double World::polarization_deg(const NodeId& qnode) const {
  RngStream rng(seed_, "world/pol/" + qnode.str());
  return rng.uniform(0.0, 180.0);
}

double World::phase_rad(const NodeId& qnode) const {
  RngStream rng(seed_, "world/phase/" + qnode.str());
  return rng.uniform(0.0, 2.0 * std::numbers::pi);
}

double World::early_arrival_s(const NodeId& qnode) const {
  RngStream rng(seed_, "world/early/" + qnode.str());
  const double width = baseline_.node(qnode).qnode().detector.time_bin_width_s;
  return (static_cast<double>(rng.uniform_int(0, 15)) + 0.5) * width;
}

double World::bin_separation_s(const NodeId& qnode) const {
  auto it = separation_s_.find(qnode);
  if (it != separation_s_.end()) return it->second;
  return 2.0 * baseline_.node(qnode).qnode().detector.time_bin_width_s;
}

std::int64_t World::delay_residual(SessionId session) const {
  RngStream rng(seed_, "world/residual/" + std::to_string(session));
  return rng.uniform_int(-kMaxResidual, kMaxResidual);
}

}  // namespace qnet
