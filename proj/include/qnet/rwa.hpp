#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "qnet/topology.hpp"

namespace qnet {

using SessionId = std::uint64_t;

/// Sessions ids at or above this value tag administrative reservations
/// (maintenance, injected port conflicts) rather than live sessions.
inline constexpr SessionId kReservationBase = SessionId{1} << 62;

struct RouteMetric {
  bool include_pdl = false;
  bool forbid_coexistence_violations = true;
  /// Links the controller considers down; never routed over.
  std::set<LinkKey> unusable_links;
  /// Nodes that may not appear anywhere on a route.
  std::set<NodeId> unusable_nodes;
};

/// A loopless route. Interior nodes are always switches.
struct Path {
  std::vector<NodeId> nodes;
  double weight = 0.0;

  bool operator==(const Path&) const = default;
};

/// Weight of a node sequence under `metric`, accumulated hop by hop from the
/// source (the same order every routing routine uses).
double route_weight(const Topology& topology, const RouteMetric& metric, const std::vector<NodeId>& nodes);

/// Minimum-weight path; ties broken lexicographically by node-id sequence.
/// Throws when src == dst or either node is unknown.
std::optional<Path> shortest_path(const Topology& topology, const RouteMetric& metric, const NodeId& src,
                                  const NodeId& dst);

/// Yen's algorithm under the same total order as shortest_path. Returns up to
/// k paths in ascending (weight, node sequence) order. Throws when k < 1.
std::vector<Path> k_shortest_paths(const Topology& topology, const RouteMetric& metric, const NodeId& src,
                                   const NodeId& dst, std::size_t k);

/// Every loopless route, ascending. Only sensible on small graphs.
std::vector<Path> all_loopless_paths(const Topology& topology, const RouteMetric& metric, const NodeId& src,
                                     const NodeId& dst);

struct CrossConnect {
  NodeId switch_id;
  int in_port = 0;
  int out_port = 0;
  SessionId session = 0;

  bool operator==(const CrossConnect&) const = default;
};

struct QuantumPath {
  std::vector<NodeId> nodes;  // EPS ... Q-node
  std::vector<LinkKey> links;
  std::vector<int> strands;  // strand used on each link
  double total_loss_db = 0.0;
  WavelengthChannel assigned_channel;

  bool operator==(const QuantumPath&) const = default;
};

struct PairAssignment {
  SessionId session = 0;
  NodeId eps;
  NodeId qnode_1;
  NodeId qnode_2;
  QuantumPath path_1;  // EPS -> Q-node-1, carries the signal channel
  QuantumPath path_2;  // EPS -> Q-node-2, carries the idler channel
  int signal_index = 0;  // 1-based grid index
  int idler_index = 0;
  WavelengthChannel signal_ch;
  WavelengthChannel idler_ch;
  ChannelEndpointAddr endpoint_1;
  ChannelEndpointAddr endpoint_2;
  std::vector<CrossConnect> cross_connects;

  bool operator==(const PairAssignment&) const = default;
};

enum class BlockCause { NoPath, NoChannel, Coexistence };
std::string_view to_string(BlockCause cause);

struct Blocked {
  BlockCause cause = BlockCause::NoPath;
  bool operator==(const Blocked&) const = default;
};

class UnknownAssignmentError : public Error {
 public:
  using Error::Error;
};

/// Resource bookkeeping for wavelength routing: EPS grid channels, per-link
/// channel occupancy, fiber strands (equivalently switch ports) and Q-node
/// channel endpoints. Mutated only by assign_pair / release_assignment /
/// reserve_strand.
class ChannelLedger {
 public:
  ChannelLedger() = default;
  explicit ChannelLedger(const Topology& topology);

  std::optional<SessionId> eps_channel_user(const NodeId& eps, int grid_index) const;
  std::optional<SessionId> link_channel_user(const LinkKey& link, const std::string& channel_label) const;
  std::optional<SessionId> strand_user(const LinkKey& link, int strand) const;
  std::optional<SessionId> qnode_channel_user(const NodeId& qnode, int channel) const;
  int strand_count(const LinkKey& link) const;

  /// Number of active PairAssignments holding channels of this EPS.
  int active_pairs(const NodeId& eps) const;

  /// Marks a strand as administratively occupied (e.g. a port held by another
  /// tenant). `tag` must be >= kReservationBase.
  void reserve_strand(const LinkKey& link, int strand, SessionId tag);
  void clear_reservation(const LinkKey& link, int strand);

  const std::map<SessionId, PairAssignment>& active() const { return active_; }
  bool is_active(SessionId session) const { return active_.contains(session); }

  /// Rebuilds every occupancy table from the active assignments plus
  /// reservations and compares. Returns an explanation on mismatch.
  std::optional<std::string> inconsistency() const;

  bool operator==(const ChannelLedger&) const = default;

 private:
  friend std::variant<PairAssignment, Blocked> assign_pair(const Topology&, ChannelLedger&, const NodeId&,
                                                           const NodeId&, const NodeId&, const RouteMetric&,
                                                           SessionId, std::size_t);
  friend void release_assignment(ChannelLedger&, SessionId);

  void occupy(const PairAssignment& assignment);
  void vacate(const PairAssignment& assignment);

  std::map<NodeId, std::vector<std::optional<SessionId>>> eps_channels_;  // index 0 = grid index 1
  std::map<LinkKey, std::map<std::string, SessionId>> link_channels_;
  std::map<LinkKey, std::vector<std::optional<SessionId>>> strands_;
  std::map<NodeId, std::vector<std::optional<SessionId>>> qnode_channels_;
  std::map<std::pair<LinkKey, int>, SessionId> reservations_;
  std::map<SessionId, PairAssignment> active_;
};

/// Route-first, first-fit wavelength assignment for one EPS serving two
/// Q-nodes. Candidate routes per arm come from Yen's enumeration (up to
/// `k_paths`, 0 = all loopless routes); route combinations are tried in
/// (rank_1, rank_2) order and, within each, conjugate pairs by ascending grid
/// index. On success the ledger is updated with both channels; on Blocked it
/// is untouched.
std::variant<PairAssignment, Blocked> assign_pair(const Topology& topology, ChannelLedger& ledger, const NodeId& eps,
                                                  const NodeId& qnode_1, const NodeId& qnode_2,
                                                  const RouteMetric& metric, SessionId session,
                                                  std::size_t k_paths = 0);

/// Frees every resource held by `session`. Throws UnknownAssignmentError if
/// the session holds no assignment.
void release_assignment(ChannelLedger& ledger, SessionId session);

}  // namespace qnet
