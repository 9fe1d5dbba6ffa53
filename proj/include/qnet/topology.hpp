#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "qnet/channel.hpp"

namespace qnet {

/// Opaque node identifier. Non-empty, no whitespace, no '/' (reserved as the
/// link separator in scenario files).
class NodeId {
 public:
  NodeId() = default;
  explicit NodeId(std::string value) : value_(std::move(value)) {}

  const std::string& str() const { return value_; }
  bool empty() const { return value_.empty(); }

  auto operator<=>(const NodeId&) const = default;
  bool operator==(const NodeId&) const = default;

 private:
  std::string value_;
};

inline std::ostream& operator<<(std::ostream& os, const NodeId& id) { return os << id.str(); }

enum class NodeKind { QNode, Eps, Switch };
enum class QubitEncoding { Polarization, TimeBin };

std::string_view to_string(NodeKind kind);
std::string_view to_string(QubitEncoding encoding);
QubitEncoding parse_encoding(std::string_view text);

struct DetectorModel {
  double efficiency = 1.0;         // (0, 1]
  double dark_rate_hz = 100.0;     // >= 0
  double time_bin_width_s = 1e-9;  // clock unit used for delay scanning

  bool operator==(const DetectorModel&) const = default;
};

struct QNodeInfo {
  std::string ip;
  std::vector<int> quantum_channels;  // 0..k-1
  DetectorModel detector;
  std::set<QubitEncoding> supported_encodings;

  bool operator==(const QNodeInfo&) const = default;
};

/// `<Q-node ip, quantum channel #>` endpoint address.
struct ChannelEndpointAddr {
  std::string node_ip;
  int channel_index = 0;

  bool operator==(const ChannelEndpointAddr&) const = default;
};

struct EpsInfo {
  double pair_rate_hz = 0.0;
  int num_wavelengths = 0;
  std::vector<WavelengthChannel> channel_grid;
  Band band = Band::C;
  std::set<QubitEncoding> encodings;

  /// Concurrent session capacity, N/2.
  int capacity() const { return num_wavelengths / 2; }
  /// 1-based grid index of the partner of `index` (i pairs with N+1-i).
  int conjugate_of(int index) const { return num_wavelengths + 1 - index; }

  bool operator==(const EpsInfo&) const = default;
};

struct SwitchInfo {
  int port_count = 0;
  double insertion_loss_db = 0.0;

  bool operator==(const SwitchInfo&) const = default;
};

struct Node {
  NodeId id;
  std::string site;
  std::variant<QNodeInfo, EpsInfo, SwitchInfo> info;

  NodeKind kind() const { return static_cast<NodeKind>(info.index()); }
  const QNodeInfo& qnode() const { return std::get<QNodeInfo>(info); }
  const EpsInfo& eps() const { return std::get<EpsInfo>(info); }
  const SwitchInfo& sw() const { return std::get<SwitchInfo>(info); }

  bool operator==(const Node&) const = default;
};

/// Unordered endpoint pair, stored with a < b.
struct LinkKey {
  NodeId a;
  NodeId b;

  static LinkKey of(NodeId x, NodeId y) {
    return x < y ? LinkKey{std::move(x), std::move(y)} : LinkKey{std::move(y), std::move(x)};
  }
  std::string str() const { return a.str() + "/" + b.str(); }

  auto operator<=>(const LinkKey&) const = default;
  bool operator==(const LinkKey&) const = default;
};

struct Link {
  NodeId endpoint_a;
  NodeId endpoint_b;
  double length_km = 0.0;
  double fiber_loss_db = 0.0;
  double insertion_loss_db = 0.0;
  double pdl_db = 0.0;
  bool carries_classical = false;
  std::vector<WavelengthChannel> classical_channels;
  // Number of fiber strands; each quantum arm occupies one. Strands attach to
  // consecutive switch ports starting at port_base on each switch endpoint.
  // 0 selects the default: N for EPS links (one strand per demultiplexed
  // wavelength), the channel count for Q-node links, 1 otherwise.
  int fibers = 0;
  int port_base_a = -1;
  int port_base_b = -1;

  LinkKey key() const { return LinkKey::of(endpoint_a, endpoint_b); }
  bool touches(const NodeId& node) const { return node == endpoint_a || node == endpoint_b; }
  const NodeId& other(const NodeId& node) const { return node == endpoint_a ? endpoint_b : endpoint_a; }
  int port_base_at(const NodeId& node) const { return node == endpoint_a ? port_base_a : port_base_b; }

  /// Routing weight: fiber + insertion loss, plus PDL when requested.
  double weight(bool include_pdl = false) const {
    const double base = fiber_loss_db + insertion_loss_db;
    return include_pdl ? base + pdl_db : base;
  }

  bool operator==(const Link&) const = default;
};

class TopologyParseError : public Error {
 public:
  TopologyParseError(int line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class TopologyValidationError : public Error {
 public:
  TopologyValidationError(std::string entity, const std::string& message)
      : Error(message + " [" + entity + "]"), entity_(std::move(entity)) {}
  /// Name of the node, link or address that failed validation.
  const std::string& entity() const { return entity_; }

 private:
  std::string entity_;
};

/// Unidirected weighted graph of typed nodes and lossy links. Immutable after
/// construction; every invariant is checked by the constructor.
class Topology {
 public:
  Topology() = default;
  Topology(std::vector<Node> nodes, std::vector<Link> links);

  const std::map<NodeId, Node>& nodes() const { return nodes_; }
  const std::map<LinkKey, Link>& links() const { return links_; }

  bool has_node(const NodeId& id) const { return nodes_.contains(id); }
  const Node& node(const NodeId& id) const;
  const Node* find_node(const NodeId& id) const;
  const Link* find_link(const NodeId& x, const NodeId& y) const;
  const Link& link(const NodeId& x, const NodeId& y) const;

  /// Incident links ordered by neighbor id. Throws for an unknown node.
  std::vector<std::pair<NodeId, const Link*>> neighbors(const NodeId& id) const;

  /// Ids of nodes of one kind, ascending.
  std::vector<NodeId> nodes_of_kind(NodeKind kind) const;
  const Node* qnode_by_ip(std::string_view ip) const;
  std::size_t site_count() const;

  /// Copy with extra fiber loss added to the listed links; port layout is
  /// unchanged. Used for drifted ground truth and the controller's routing view.
  Topology with_extra_loss(const std::map<LinkKey, double>& extra_loss_db) const;

  bool operator==(const Topology& other) const { return nodes_ == other.nodes_ && links_ == other.links_; }

 private:
  void validate_and_index();

  std::map<NodeId, Node> nodes_;
  std::map<LinkKey, Link> links_;
  std::map<NodeId, std::vector<LinkKey>> adjacency_;
};

/// Parses the line-oriented topology format (see README for the grammar).
Topology load_topology(std::string_view document);
Topology load_topology_file(const std::string& path);
std::string serialize_topology(const Topology& topology);

/// Resolves a walk given as links into the visited node sequence. Throws
/// qnet::Error when consecutive links do not share an endpoint.
std::vector<NodeId> walk_nodes(std::span<const Link> path);

/// Sum of link weights over a connected walk plus each traversed (interior)
/// switch's insertion loss. Empty walk is 0 dB.
double path_loss_db(const Topology& topology, std::span<const Link> path, bool include_pdl = false);
/// Same metric over a node sequence.
double path_loss_db(const Topology& topology, std::span<const NodeId> nodes, bool include_pdl = false);

/// Links visited by a node sequence; throws if two consecutive nodes are not adjacent.
std::vector<Link> links_along(const Topology& topology, std::span<const NodeId> nodes);

struct CoexistenceViolation {
  WavelengthChannel classical;
  double gap_thz = 0.0;  // quantum - classical
};

struct CoexistenceReport {
  bool ok = true;
  std::vector<CoexistenceViolation> violations;
};

/// A quantum channel may share a link with classical traffic only when its
/// center frequency sits more than 20 THz above every classical channel.
CoexistenceReport validate_coexistence(const Topology& topology, const WavelengthChannel& quantum_ch,
                                       const Link& link);
/// Rule applied to a link value without a topology lookup.
CoexistenceReport coexistence_on(const WavelengthChannel& quantum_ch, const Link& link);

}  // namespace qnet

template <>
struct std::hash<qnet::NodeId> {
  std::size_t operator()(const qnet::NodeId& id) const noexcept { return std::hash<std::string>{}(id.str()); }
};
