#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "qnet/messages.hpp"
#include "qnet/topology.hpp"

namespace qnet {

/// Physical ground truth of a simulation run: current link losses, failed
/// nodes, stray light and the hidden offsets that calibration has to find.
/// Agents read it only to emulate measurements.
class World {
 public:
  World() = default;
  World(Topology truth, std::uint64_t seed);

  const Topology& baseline() const { return baseline_; }
  /// Ground truth with drift applied.
  const Topology& current() const { return current_; }

  void add_drift(const LinkKey& link, double delta_db);
  void set_down(const NodeId& node);
  bool is_down(const NodeId& node) const { return down_.contains(node); }
  const std::set<NodeId>& down_nodes() const { return down_; }
  void set_leakage(const NodeId& qnode, double hz) { leakage_hz_[qnode] = hz; }
  double leakage_hz(const NodeId& qnode) const;

  /// Loss along a node sequence right now; +inf when any node on it is down.
  double path_loss_db(const std::vector<NodeId>& nodes) const;
  double link_loss_db(const LinkKey& link) const;

  double polarization_deg(const NodeId& qnode) const;
  double phase_rad(const NodeId& qnode) const;
  /// Arrival time of the early bin within one clock period, seconds.
  double early_arrival_s(const NodeId& qnode) const;
  double bin_separation_s(const NodeId& qnode) const;
  void set_bin_separation(const NodeId& qnode, double seconds) { separation_s_[qnode] = seconds; }

  /// Hidden clock offset between the two receivers of a session, relative to
  /// the controller's nominal estimate, in ticks.
  std::int64_t delay_residual(SessionId session) const;
  static constexpr std::int64_t kMaxResidual = 20;

 private:
  Topology baseline_;
  Topology current_;
  std::uint64_t seed_ = 0;
  std::map<LinkKey, double> drift_;
  std::set<NodeId> down_;
  std::map<NodeId, double> leakage_hz_;
  std::map<NodeId, double> separation_s_;
};

}  // namespace qnet
