#include "qnet/rwa.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <set>

namespace qnet {

std::string_view to_string(BlockCause cause) {
  switch (cause) {
    case BlockCause::NoPath: return "no_path";
    case BlockCause::NoChannel: return "no_channel";
    case BlockCause::Coexistence: return "coexistence";
  }
  return "?";
}

namespace {

// Routing order: weight, then node-id sequence.
bool route_less(double wa, const std::vector<NodeId>& a, double wb, const std::vector<NodeId>& b) {
  if (wa != wb) return wa < wb;
  return a < b;
}

struct Label {
  double weight;
  std::vector<NodeId> nodes;
};

struct LabelGreater {
  bool operator()(const Label& x, const Label& y) const { return route_less(y.weight, y.nodes, x.weight, x.nodes); }
};

bool link_allowed(const RouteMetric& metric, const Link& link, const std::set<LinkKey>& removed_links) {
  const LinkKey key = link.key();
  return !metric.unusable_links.contains(key) && !removed_links.contains(key);
}

// Label-setting search from a fixed root prefix. The (weight, sequence) order
// is preserved under extension, so the first label settled at `dst` is the
// minimum among all routes that extend the root.
std::optional<Label> dijkstra_from(const Topology& topology, const RouteMetric& metric, Label root,
                                   const NodeId& dst, const std::set<NodeId>& removed_nodes,
                                   const std::set<LinkKey>& removed_links) {
  std::priority_queue<Label, std::vector<Label>, LabelGreater> queue;
  std::set<NodeId> settled;
  queue.push(std::move(root));
  while (!queue.empty()) {
    Label label = queue.top();
    queue.pop();
    const NodeId& at = label.nodes.back();
    if (!settled.insert(at).second) continue;
    if (at == dst) return label;
    const Node& here = topology.node(at);
    const bool interior = label.nodes.size() > 1;
    if (interior && here.kind() != NodeKind::Switch) continue;
    const double via_cost = interior ? here.sw().insertion_loss_db : 0.0;
    for (const auto& [next, link] : topology.neighbors(at)) {
      if (settled.contains(next) || removed_nodes.contains(next) || metric.unusable_nodes.contains(next)) continue;
      if (std::find(label.nodes.begin(), label.nodes.end(), next) != label.nodes.end()) continue;
      if (!link_allowed(metric, *link, removed_links)) continue;
      Label ext{label.weight, label.nodes};
      if (interior) ext.weight += via_cost;
      ext.weight += link->weight(metric.include_pdl);
      ext.nodes.push_back(next);
      queue.push(std::move(ext));
    }
  }
  return std::nullopt;
}

void check_endpoints(const Topology& topology, const NodeId& src, const NodeId& dst) {
  topology.node(src);
  topology.node(dst);
  if (src == dst) throw Error("route endpoints must differ ('" + src.str() + "')");
}

// Lazily enumerates loopless routes in ascending order (Yen).
class YenEnumerator {
 public:
  YenEnumerator(const Topology& topology, const RouteMetric& metric, NodeId src, NodeId dst)
      : topology_(topology), metric_(metric), src_(std::move(src)), dst_(std::move(dst)) {}

  std::optional<Path> next() {
    if (accepted_.empty()) {
      if (metric_.unusable_nodes.contains(src_) || metric_.unusable_nodes.contains(dst_)) return std::nullopt;
      auto first = dijkstra_from(topology_, metric_, Label{0.0, {src_}}, dst_, {}, {});
      if (!first) return std::nullopt;
      accepted_.push_back(Path{first->nodes, first->weight});
      return accepted_.back();
    }
    const Path& last = accepted_.back();
    for (std::size_t i = 0; i + 1 < last.nodes.size(); ++i) {
      std::vector<NodeId> root(last.nodes.begin(), last.nodes.begin() + static_cast<long>(i) + 1);
      std::set<LinkKey> removed_links;
      for (const auto& p : accepted_)
        if (p.nodes.size() > i + 1 && std::equal(root.begin(), root.end(), p.nodes.begin()))
          removed_links.insert(LinkKey::of(p.nodes[i], p.nodes[i + 1]));
      std::set<NodeId> removed_nodes(root.begin(), root.end() - 1);
      const double root_weight = route_weight(topology_, metric_, root);
      auto spur = dijkstra_from(topology_, metric_, Label{root_weight, root}, dst_, removed_nodes, removed_links);
      if (!spur) continue;
      Path candidate{spur->nodes, spur->weight};
      if (std::find(accepted_.begin(), accepted_.end(), candidate) == accepted_.end()) candidates_.insert(candidate);
    }
    if (candidates_.empty()) return std::nullopt;
    auto best = candidates_.begin();
    accepted_.push_back(*best);
    candidates_.erase(best);
    return accepted_.back();
  }

 private:
  struct PathLess {
    bool operator()(const Path& a, const Path& b) const { return route_less(a.weight, a.nodes, b.weight, b.nodes); }
  };

  const Topology& topology_;
  const RouteMetric& metric_;
  NodeId src_;
  NodeId dst_;
  std::vector<Path> accepted_;
  std::set<Path, PathLess> candidates_;
};

}  // namespace

double route_weight(const Topology& topology, const RouteMetric& metric, const std::vector<NodeId>& nodes) {
  double total = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (i > 1) {
      const Node& via = topology.node(nodes[i - 1]);
      if (via.kind() == NodeKind::Switch) total += via.sw().insertion_loss_db;
    }
    total += topology.link(nodes[i - 1], nodes[i]).weight(metric.include_pdl);
  }
  return total;
}

std::optional<Path> shortest_path(const Topology& topology, const RouteMetric& metric, const NodeId& src,
                                  const NodeId& dst) {
  check_endpoints(topology, src, dst);
  return YenEnumerator(topology, metric, src, dst).next();
}

std::vector<Path> k_shortest_paths(const Topology& topology, const RouteMetric& metric, const NodeId& src,
                                   const NodeId& dst, std::size_t k) {
  if (k < 1) throw Error("k_shortest_paths needs k >= 1");
  check_endpoints(topology, src, dst);
  YenEnumerator yen(topology, metric, src, dst);
  std::vector<Path> out;
  while (out.size() < k) {
    auto path = yen.next();
    if (!path) break;
    out.push_back(std::move(*path));
  }
  return out;
}

std::vector<Path> all_loopless_paths(const Topology& topology, const RouteMetric& metric, const NodeId& src,
                                     const NodeId& dst) {
  return k_shortest_paths(topology, metric, src, dst, std::numeric_limits<std::size_t>::max());
}

// ---------------------------------------------------------------------------
// Ledger

ChannelLedger::ChannelLedger(const Topology& topology) {
  for (const auto& [id, node] : topology.nodes()) {
    if (node.kind() == NodeKind::Eps) eps_channels_[id].resize(node.eps().num_wavelengths);
    if (node.kind() == NodeKind::QNode) qnode_channels_[id].resize(node.qnode().quantum_channels.size());
  }
  for (const auto& [key, link] : topology.links()) {
    strands_[key].resize(link.fibers);
    link_channels_[key];
  }
}

namespace {

template <class Map, class Key>
std::optional<SessionId> slot_user(const Map& map, const Key& key, int index) {
  auto it = map.find(key);
  if (it == map.end() || index < 0 || index >= static_cast<int>(it->second.size())) return std::nullopt;
  return it->second[index];
}

}  // namespace

std::optional<SessionId> ChannelLedger::eps_channel_user(const NodeId& eps, int grid_index) const {
  return slot_user(eps_channels_, eps, grid_index - 1);
}

std::optional<SessionId> ChannelLedger::link_channel_user(const LinkKey& link, const std::string& label) const {
  auto it = link_channels_.find(link);
  if (it == link_channels_.end()) return std::nullopt;
  auto ch = it->second.find(label);
  if (ch == it->second.end()) return std::nullopt;
  return ch->second;
}

std::optional<SessionId> ChannelLedger::strand_user(const LinkKey& link, int strand) const {
  return slot_user(strands_, link, strand);
}

std::optional<SessionId> ChannelLedger::qnode_channel_user(const NodeId& qnode, int channel) const {
  return slot_user(qnode_channels_, qnode, channel);
}

int ChannelLedger::strand_count(const LinkKey& link) const {
  auto it = strands_.find(link);
  return it == strands_.end() ? 0 : static_cast<int>(it->second.size());
}

int ChannelLedger::active_pairs(const NodeId& eps) const {
  return static_cast<int>(std::count_if(active_.begin(), active_.end(),
                                        [&](const auto& entry) { return entry.second.eps == eps; }));
}

void ChannelLedger::reserve_strand(const LinkKey& link, int strand, SessionId tag) {
  if (tag < kReservationBase) throw Error("reservation tags must be >= kReservationBase");
  auto it = strands_.find(link);
  if (it == strands_.end() || strand < 0 || strand >= static_cast<int>(it->second.size()))
    throw Error("no strand " + std::to_string(strand) + " on link '" + link.str() + "'");
  if (it->second[strand]) throw Error("strand already occupied on link '" + link.str() + "'");
  it->second[strand] = tag;
  reservations_[{link, strand}] = tag;
}

void ChannelLedger::clear_reservation(const LinkKey& link, int strand) {
  auto it = reservations_.find({link, strand});
  if (it == reservations_.end()) throw Error("no reservation on link '" + link.str() + "'");
  strands_.at(link)[strand].reset();
  reservations_.erase(it);
}

void ChannelLedger::occupy(const PairAssignment& a) {
  eps_channels_.at(a.eps)[a.signal_index - 1] = a.session;
  eps_channels_.at(a.eps)[a.idler_index - 1] = a.session;
  for (const auto* path : {&a.path_1, &a.path_2}) {
    for (std::size_t i = 0; i < path->links.size(); ++i) {
      link_channels_[path->links[i]][path->assigned_channel.label] = a.session;
      strands_.at(path->links[i])[path->strands[i]] = a.session;
    }
  }
  qnode_channels_.at(a.qnode_1)[a.endpoint_1.channel_index] = a.session;
  qnode_channels_.at(a.qnode_2)[a.endpoint_2.channel_index] = a.session;
  active_.emplace(a.session, a);
}

void ChannelLedger::vacate(const PairAssignment& a) {
  eps_channels_.at(a.eps)[a.signal_index - 1].reset();
  eps_channels_.at(a.eps)[a.idler_index - 1].reset();
  for (const auto* path : {&a.path_1, &a.path_2}) {
    for (std::size_t i = 0; i < path->links.size(); ++i) {
      link_channels_.at(path->links[i]).erase(path->assigned_channel.label);
      strands_.at(path->links[i])[path->strands[i]].reset();
    }
  }
  qnode_channels_.at(a.qnode_1)[a.endpoint_1.channel_index].reset();
  qnode_channels_.at(a.qnode_2)[a.endpoint_2.channel_index].reset();
}

std::optional<std::string> ChannelLedger::inconsistency() const {
  ChannelLedger rebuilt;
  for (const auto& [id, slots] : eps_channels_) rebuilt.eps_channels_[id].resize(slots.size());
  for (const auto& [id, slots] : qnode_channels_) rebuilt.qnode_channels_[id].resize(slots.size());
  for (const auto& [key, slots] : strands_) {
    rebuilt.strands_[key].resize(slots.size());
    rebuilt.link_channels_[key];
  }
  for (const auto& [key, tag] : reservations_) rebuilt.strands_.at(key.first)[key.second] = tag;
  for (const auto& [session, assignment] : active_) {
    if (assignment.session != session) return "assignment keyed under the wrong session";
    // a channel in use must belong to exactly one session
    if (rebuilt.eps_channels_.at(assignment.eps)[assignment.signal_index - 1] ||
        rebuilt.eps_channels_.at(assignment.eps)[assignment.idler_index - 1])
      return "EPS channel held twice (" + assignment.eps.str() + ")";
    rebuilt.occupy(assignment);
  }
  rebuilt.reservations_ = reservations_;
  if (rebuilt.eps_channels_ != eps_channels_) return "EPS channel table mismatch";
  if (rebuilt.link_channels_ != link_channels_) return "link channel table mismatch";
  if (rebuilt.strands_ != strands_) return "strand table mismatch";
  if (rebuilt.qnode_channels_ != qnode_channels_) return "Q-node endpoint table mismatch";
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Assignment

namespace {

int first_free(const std::vector<std::optional<SessionId>>& slots, const std::set<int>& taken = {}) {
  for (int i = 0; i < static_cast<int>(slots.size()); ++i)
    if (!slots[i] && !taken.contains(i)) return i;
  return -1;
}

// Strand choice for both arms jointly. EPS links use the strand of the
// wavelength's demultiplexer output; other links take the lowest free strand.
bool pick_strands(const Topology& topology, const ChannelLedger& ledger, const Path& p1, const Path& p2,
                  int signal_index, int idler_index, std::vector<int>& s1, std::vector<int>& s2) {
  std::map<LinkKey, std::set<int>> taken;
  auto pick = [&](const Path& path, int grid_index, std::vector<int>& out) {
    out.clear();
    for (std::size_t i = 1; i < path.nodes.size(); ++i) {
      const LinkKey key = LinkKey::of(path.nodes[i - 1], path.nodes[i]);
      const Link& link = topology.links().at(key);
      const bool eps_link = topology.node(link.endpoint_a).kind() == NodeKind::Eps ||
                            topology.node(link.endpoint_b).kind() == NodeKind::Eps;
      int strand = -1;
      if (eps_link) {
        strand = grid_index - 1;
        if (ledger.strand_user(key, strand) || taken[key].contains(strand)) return false;
      } else {
        std::vector<std::optional<SessionId>> slots(ledger.strand_count(key));
        for (int s = 0; s < static_cast<int>(slots.size()); ++s) slots[s] = ledger.strand_user(key, s);
        strand = first_free(slots, taken[key]);
        if (strand < 0) return false;
      }
      taken[key].insert(strand);
      out.push_back(strand);
    }
    return true;
  };
  return pick(p1, signal_index, s1) && pick(p2, idler_index, s2);
}

bool channel_free_along(const ChannelLedger& ledger, const Path& path, const WavelengthChannel& ch) {
  for (std::size_t i = 1; i < path.nodes.size(); ++i)
    if (ledger.link_channel_user(LinkKey::of(path.nodes[i - 1], path.nodes[i]), ch.label)) return false;
  return true;
}

bool coexists_along(const Topology& topology, const Path& path, const WavelengthChannel& ch) {
  for (std::size_t i = 1; i < path.nodes.size(); ++i)
    if (!coexistence_on(ch, topology.link(path.nodes[i - 1], path.nodes[i])).ok) return false;
  return true;
}

QuantumPath make_quantum_path(const Topology& topology, const Path& path, const std::vector<int>& strands,
                              const WavelengthChannel& channel) {
  QuantumPath out;
  out.nodes = path.nodes;
  for (std::size_t i = 1; i < path.nodes.size(); ++i) out.links.push_back(LinkKey::of(path.nodes[i - 1], path.nodes[i]));
  out.strands = strands;
  out.total_loss_db = path_loss_db(topology, std::span<const NodeId>(path.nodes));
  out.assigned_channel = channel;
  return out;
}

void add_cross_connects(const Topology& topology, const QuantumPath& path, SessionId session,
                        std::vector<CrossConnect>& out) {
  for (std::size_t i = 1; i + 1 < path.nodes.size(); ++i) {
    const NodeId& sw = path.nodes[i];
    const Link& in = topology.links().at(path.links[i - 1]);
    const Link& outl = topology.links().at(path.links[i]);
    out.push_back({sw, in.port_base_at(sw) + path.strands[i - 1], outl.port_base_at(sw) + path.strands[i], session});
  }
}

}  // namespace

std::variant<PairAssignment, Blocked> assign_pair(const Topology& topology, ChannelLedger& ledger, const NodeId& eps,
                                                  const NodeId& qnode_1, const NodeId& qnode_2,
                                                  const RouteMetric& metric, SessionId session,
                                                  std::size_t k_paths) {
  const Node& eps_node = topology.node(eps);
  if (eps_node.kind() != NodeKind::Eps) throw Error("'" + eps.str() + "' is not an EPS");
  if (topology.node(qnode_1).kind() != NodeKind::QNode || topology.node(qnode_2).kind() != NodeKind::QNode)
    throw Error("assign_pair endpoints must be Q-nodes");
  if (qnode_1 == qnode_2) throw Error("assign_pair needs two distinct Q-nodes");
  if (ledger.is_active(session)) throw Error("session " + std::to_string(session) + " already holds an assignment");
  const EpsInfo& info = eps_node.eps();

  // Q-node endpoint channels are path independent.
  auto endpoint = [&](const NodeId& q) {
    const auto& channels = topology.node(q).qnode().quantum_channels;
    for (int c : channels)
      if (!ledger.qnode_channel_user(q, c)) return c;
    return -1;
  };
  const int ep1 = endpoint(qnode_1);
  const int ep2 = endpoint(qnode_2);

  std::vector<int> free_pairs;
  for (int i = 1; i <= info.capacity(); ++i)
    if (!ledger.eps_channel_user(eps, i) && !ledger.eps_channel_user(eps, info.conjugate_of(i))) free_pairs.push_back(i);

  const std::size_t k = k_paths == 0 ? std::numeric_limits<std::size_t>::max() : k_paths;
  const auto arms_1 = k_shortest_paths(topology, metric, eps, qnode_1, k);
  const auto arms_2 = k_shortest_paths(topology, metric, eps, qnode_2, k);
  if (arms_1.empty() || arms_2.empty()) return Blocked{BlockCause::NoPath};
  if (free_pairs.empty() || ep1 < 0 || ep2 < 0) return Blocked{BlockCause::NoChannel};

  BlockCause furthest = BlockCause::NoPath;
  auto note = [&](BlockCause c) {
    if (static_cast<int>(c) > static_cast<int>(furthest)) furthest = c;
  };

  // Per-arm screening, one status per free pair; joint checks only run for
  // combinations where both arms pass on their own.
  constexpr int kOk = -1;
  auto screen = [&](const Path& path, bool signal_arm) {
    std::vector<int> status;
    for (int signal : free_pairs) {
      const int index = signal_arm ? signal : info.conjugate_of(signal);
      const WavelengthChannel& ch = info.channel_grid[index - 1];
      std::vector<int> strands, unused;
      const Path empty{{path.nodes.front()}, 0.0};
      const bool strands_ok = signal_arm ? pick_strands(topology, ledger, path, empty, index, 0, strands, unused)
                                         : pick_strands(topology, ledger, empty, path, 0, index, unused, strands);
      if (!strands_ok) {
        status.push_back(static_cast<int>(BlockCause::NoPath));
      } else if (!channel_free_along(ledger, path, ch)) {
        status.push_back(static_cast<int>(BlockCause::NoChannel));
      } else if (metric.forbid_coexistence_violations && !coexists_along(topology, path, ch)) {
        status.push_back(static_cast<int>(BlockCause::Coexistence));
      } else {
        status.push_back(kOk);
      }
    }
    return status;
  };
  std::vector<std::vector<int>> screen_1, screen_2;
  for (const auto& p : arms_1) screen_1.push_back(screen(p, true));
  for (const auto& p : arms_2) screen_2.push_back(screen(p, false));
  auto any_ok = [&](const std::vector<int>& st) { return std::find(st.begin(), st.end(), kOk) != st.end(); };
  for (const auto& st : screen_1)
    for (int c : st)
      if (c != kOk) note(static_cast<BlockCause>(c));
  for (const auto& st : screen_2)
    for (int c : st)
      if (c != kOk) note(static_cast<BlockCause>(c));

  for (std::size_t r1 = 0; r1 < arms_1.size(); ++r1) {
    if (!any_ok(screen_1[r1])) continue;
    for (std::size_t r2 = 0; r2 < arms_2.size(); ++r2) {
      if (!any_ok(screen_2[r2])) continue;
      const Path& p1 = arms_1[r1];
      const Path& p2 = arms_2[r2];
      for (std::size_t j = 0; j < free_pairs.size(); ++j) {
        if (screen_1[r1][j] != kOk || screen_2[r2][j] != kOk) continue;
        const int signal = free_pairs[j];
        const int idler = info.conjugate_of(signal);
        std::vector<int> s1, s2;
        if (!pick_strands(topology, ledger, p1, p2, signal, idler, s1, s2)) {
          note(BlockCause::NoPath);
          continue;
        }
        const WavelengthChannel& sig_ch = info.channel_grid[signal - 1];
        const WavelengthChannel& idl_ch = info.channel_grid[idler - 1];
        PairAssignment a;
        a.session = session;
        a.eps = eps;
        a.qnode_1 = qnode_1;
        a.qnode_2 = qnode_2;
        a.path_1 = make_quantum_path(topology, p1, s1, sig_ch);
        a.path_2 = make_quantum_path(topology, p2, s2, idl_ch);
        a.signal_index = signal;
        a.idler_index = idler;
        a.signal_ch = sig_ch;
        a.idler_ch = idl_ch;
        a.endpoint_1 = {topology.node(qnode_1).qnode().ip, ep1};
        a.endpoint_2 = {topology.node(qnode_2).qnode().ip, ep2};
        add_cross_connects(topology, a.path_1, session, a.cross_connects);
        add_cross_connects(topology, a.path_2, session, a.cross_connects);
        ledger.occupy(a);
        return a;
      }
    }
  }
  return Blocked{furthest};
}

void release_assignment(ChannelLedger& ledger, SessionId session) {
  auto it = ledger.active_.find(session);
  if (it == ledger.active_.end())
    throw UnknownAssignmentError("no active assignment for session " + std::to_string(session));
  ledger.vacate(it->second);
  ledger.active_.erase(it);
}

}  // namespace qnet
