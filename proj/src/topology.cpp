#include "qnet/topology.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace qnet {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::QNode: return "qnode";
    case NodeKind::Eps: return "eps";
    case NodeKind::Switch: return "switch";
  }
  return "?";
}

std::string_view to_string(QubitEncoding encoding) {
  return encoding == QubitEncoding::Polarization ? "pol" : "timebin";
}

QubitEncoding parse_encoding(std::string_view text) {
  if (text == "pol" || text == "polarization") return QubitEncoding::Polarization;
  if (text == "timebin" || text == "time-bin") return QubitEncoding::TimeBin;
  throw Error("unknown qubit encoding '" + std::string(text) + "'");
}

namespace {

bool valid_id(const std::string& id) {
  if (id.empty()) return false;
  return std::none_of(id.begin(), id.end(), [](char c) {
    return c == '/' || c == '#' || c == '=' || std::isspace(static_cast<unsigned char>(c));
  });
}

bool valid_ipv4(const std::string& ip) {
  int parts = 0;
  std::size_t pos = 0;
  while (pos <= ip.size()) {
    std::size_t dot = ip.find('.', pos);
    if (dot == std::string::npos) dot = ip.size();
    std::string_view part(ip.data() + pos, dot - pos);
    if (part.empty() || part.size() > 3) return false;
    int value = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc{} || ptr != part.data() + part.size() || value > 255) return false;
    ++parts;
    pos = dot + 1;
    if (dot == ip.size()) break;
  }
  return parts == 4;
}

void require_finite_nonneg(double value, const std::string& entity, const char* what) {
  if (!std::isfinite(value) || value < 0.0)
    throw TopologyValidationError(entity, std::string(what) + " must be finite and >= 0");
}

}  // namespace

Topology::Topology(std::vector<Node> nodes, std::vector<Link> links) {
  for (auto& node : nodes) {
    if (!valid_id(node.id.str())) throw TopologyValidationError(node.id.str(), "invalid node id");
    if (nodes_.contains(node.id)) throw TopologyValidationError(node.id.str(), "duplicate node id");
    if (node.site.empty()) node.site = node.id.str();
    NodeId id = node.id;
    nodes_.emplace(std::move(id), std::move(node));
  }
  for (auto& link : links) {
    const std::string name = link.endpoint_a.str() + "/" + link.endpoint_b.str();
    if (!nodes_.contains(link.endpoint_a))
      throw TopologyValidationError(link.endpoint_a.str(), "link " + name + " references unknown node");
    if (!nodes_.contains(link.endpoint_b))
      throw TopologyValidationError(link.endpoint_b.str(), "link " + name + " references unknown node");
    if (link.endpoint_a == link.endpoint_b) throw TopologyValidationError(name, "self-loop link");
    LinkKey key = link.key();
    if (links_.contains(key)) throw TopologyValidationError(key.str(), "duplicate link");
    links_.emplace(std::move(key), std::move(link));
  }
  validate_and_index();
}

void Topology::validate_and_index() {
  std::set<std::string> ips;
  for (const auto& [id, node] : nodes_) {
    const std::string& name = id.str();
    switch (node.kind()) {
      case NodeKind::QNode: {
        const auto& q = node.qnode();
        if (!valid_ipv4(q.ip)) throw TopologyValidationError(name, "invalid ip '" + q.ip + "'");
        if (!ips.insert(q.ip).second) throw TopologyValidationError(q.ip, "duplicate Q-node ip");
        if (q.quantum_channels.empty()) throw TopologyValidationError(name, "Q-node needs at least one quantum channel");
        for (std::size_t i = 0; i < q.quantum_channels.size(); ++i)
          if (q.quantum_channels[i] != static_cast<int>(i))
            throw TopologyValidationError(name, "quantum channel indices must be consecutive from 0");
        if (q.supported_encodings.empty()) throw TopologyValidationError(name, "Q-node supports no encoding");
        const auto& d = q.detector;
        if (!(d.efficiency > 0.0 && d.efficiency <= 1.0))
          throw TopologyValidationError(name, "detector efficiency must lie in (0, 1]");
        require_finite_nonneg(d.dark_rate_hz, name, "dark rate");
        if (!(d.time_bin_width_s > 0.0)) throw TopologyValidationError(name, "clock unit must be > 0");
        break;
      }
      case NodeKind::Eps: {
        const auto& e = node.eps();
        if (!(e.pair_rate_hz > 0.0) || !std::isfinite(e.pair_rate_hz))
          throw TopologyValidationError(name, "pair rate must be > 0");
        if (e.num_wavelengths <= 0 || e.num_wavelengths % 2 != 0)
          throw TopologyValidationError(name, "EPS wavelength count N must be even and positive");
        if (static_cast<int>(e.channel_grid.size()) != e.num_wavelengths)
          throw TopologyValidationError(name, "EPS grid must list exactly N channels");
        std::set<double> freqs;
        for (const auto& ch : e.channel_grid) {
          if (!freqs.insert(ch.center_freq_thz).second)
            throw TopologyValidationError(name, "duplicate grid channel " + ch.label);
          if (ch.band != e.band) throw TopologyValidationError(name, "grid channel " + ch.label + " outside EPS band");
          if (ch.width_ghz > kGridSpacingGhz) throw TopologyValidationError(name, "channel wider than 100 GHz");
        }
        if (e.encodings.empty()) throw TopologyValidationError(name, "EPS supports no encoding");
        break;
      }
      case NodeKind::Switch: {
        const auto& s = node.sw();
        if (s.port_count <= 0) throw TopologyValidationError(name, "switch needs a positive port count");
        require_finite_nonneg(s.insertion_loss_db, name, "switch insertion loss");
        break;
      }
    }
  }

  for (auto& [key, link] : links_) {
    const std::string name = key.str();
    require_finite_nonneg(link.length_km, name, "length");
    require_finite_nonneg(link.fiber_loss_db, name, "fiber loss");
    require_finite_nonneg(link.insertion_loss_db, name, "insertion loss");
    require_finite_nonneg(link.pdl_db, name, "PDL");
    if (!link.classical_channels.empty()) link.carries_classical = true;
    if (link.carries_classical && link.classical_channels.empty())
      throw TopologyValidationError(name, "classical link lists no channels");

    const Node& a = nodes_.at(link.endpoint_a);
    const Node& b = nodes_.at(link.endpoint_b);
    const Node* eps = a.kind() == NodeKind::Eps ? &a : (b.kind() == NodeKind::Eps ? &b : nullptr);
    const Node* qn = a.kind() == NodeKind::QNode ? &a : (b.kind() == NodeKind::QNode ? &b : nullptr);
    if (eps) {
      const int n = eps->eps().num_wavelengths;
      if (link.fibers != 0 && link.fibers != n)
        throw TopologyValidationError(name, "EPS link must carry one strand per wavelength (fibers=N)");
      link.fibers = n;
    } else if (link.fibers == 0) {
      link.fibers = qn ? static_cast<int>(qn->qnode().quantum_channels.size()) : 1;
    }
    if (link.fibers < 1) throw TopologyValidationError(name, "fiber count must be >= 1");
    adjacency_[link.endpoint_a].push_back(key);
    adjacency_[link.endpoint_b].push_back(key);
  }

  // Canonical port layout: per switch, incident links by neighbor id.
  for (auto& [id, keys] : adjacency_) {
    std::sort(keys.begin(), keys.end(), [&](const LinkKey& x, const LinkKey& y) {
      const NodeId& nx = x.a == id ? x.b : x.a;
      const NodeId& ny = y.a == id ? y.b : y.a;
      return nx < ny;
    });
    const Node& node = nodes_.at(id);
    if (node.kind() != NodeKind::Switch) continue;
    int next_port = 0;
    for (const auto& key : keys) {
      Link& link = links_.at(key);
      const Node& peer = nodes_.at(link.other(id));
      if (peer.kind() == NodeKind::Eps && node.sw().port_count <= peer.eps().num_wavelengths)
        throw TopologyValidationError(id.str(), "switch port count M must exceed attached EPS wavelength count N");
      (link.endpoint_a == id ? link.port_base_a : link.port_base_b) = next_port;
      next_port += link.fibers;
    }
    if (next_port > node.sw().port_count)
      throw TopologyValidationError(id.str(), "attached strands exceed switch port count");
  }
  for (const auto& [id, node] : nodes_) adjacency_.try_emplace(id);
}

const Node& Topology::node(const NodeId& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error("unknown node '" + id.str() + "'");
  return it->second;
}

const Node* Topology::find_node(const NodeId& id) const {
  auto it = nodes_.find(id);
  return it == nodes_.end() ? nullptr : &it->second;
}

const Link* Topology::find_link(const NodeId& x, const NodeId& y) const {
  auto it = links_.find(LinkKey::of(x, y));
  return it == links_.end() ? nullptr : &it->second;
}

const Link& Topology::link(const NodeId& x, const NodeId& y) const {
  const Link* link = find_link(x, y);
  if (!link) throw Error("no link between '" + x.str() + "' and '" + y.str() + "'");
  return *link;
}

std::vector<std::pair<NodeId, const Link*>> Topology::neighbors(const NodeId& id) const {
  auto it = adjacency_.find(id);
  if (it == adjacency_.end()) throw Error("unknown node '" + id.str() + "'");
  std::vector<std::pair<NodeId, const Link*>> out;
  out.reserve(it->second.size());
  for (const auto& key : it->second) {
    const Link& link = links_.at(key);
    out.emplace_back(link.other(id), &link);
  }
  return out;
}

std::vector<NodeId> Topology::nodes_of_kind(NodeKind kind) const {
  std::vector<NodeId> out;
  for (const auto& [id, node] : nodes_)
    if (node.kind() == kind) out.push_back(id);
  return out;
}

const Node* Topology::qnode_by_ip(std::string_view ip) const {
  for (const auto& [id, node] : nodes_)
    if (node.kind() == NodeKind::QNode && node.qnode().ip == ip) return &node;
  return nullptr;
}

std::size_t Topology::site_count() const {
  std::set<std::string> sites;
  for (const auto& [id, node] : nodes_) sites.insert(node.site);
  return sites.size();
}

Topology Topology::with_extra_loss(const std::map<LinkKey, double>& extra_loss_db) const {
  Topology copy = *this;
  for (const auto& [key, extra] : extra_loss_db) {
    auto it = copy.links_.find(key);
    if (it == copy.links_.end()) throw Error("unknown link '" + key.str() + "'");
    it->second.fiber_loss_db += extra;
  }
  return copy;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

struct Line {
  int number = 0;
  std::vector<std::string> words;
  std::map<std::string, std::string> keys;
};

double to_double(const Line& line, const std::string& key, const std::string& text) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw TopologyParseError(line.number, "key '" + key + "' expects a number, got '" + text + "'");
  return value;
}

long to_int(const Line& line, const std::string& key, const std::string& text) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw TopologyParseError(line.number, "key '" + key + "' expects an integer, got '" + text + "'");
  return value;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string current;
  std::istringstream in(text);
  while (std::getline(in, current, sep)) out.push_back(current);
  return out;
}

class KeyReader {
 public:
  KeyReader(const Line& line, std::set<std::string> allowed) : line_(line) {
    for (const auto& [key, value] : line.keys)
      if (!allowed.contains(key)) throw TopologyParseError(line.number, "unknown key '" + key + "'");
  }
  bool has(const std::string& key) const { return line_.keys.contains(key); }
  const std::string& str(const std::string& key) const {
    auto it = line_.keys.find(key);
    if (it == line_.keys.end()) throw TopologyParseError(line_.number, "missing required key '" + key + "'");
    return it->second;
  }
  double num(const std::string& key) const { return to_double(line_, key, str(key)); }
  double num_or(const std::string& key, double fallback) const { return has(key) ? num(key) : fallback; }
  long integer(const std::string& key) const { return to_int(line_, key, str(key)); }

  std::vector<WavelengthChannel> channels(const std::string& key) const {
    std::vector<WavelengthChannel> out;
    const std::string& text = str(key);
    if (text == "none") return out;
    for (const auto& label : split(text, ',')) {
      try {
        out.push_back(parse_channel(label));
      } catch (const Error& e) {
        throw TopologyParseError(line_.number, e.what());
      }
    }
    return out;
  }

  std::set<QubitEncoding> encodings(const std::string& key) const {
    std::set<QubitEncoding> out;
    for (const auto& item : split(str(key), ',')) {
      try {
        out.insert(parse_encoding(item));
      } catch (const Error& e) {
        throw TopologyParseError(line_.number, e.what());
      }
    }
    return out;
  }

 private:
  const Line& line_;
};

Line tokenize(const std::string& raw, int number) {
  Line line;
  line.number = number;
  std::string text = raw.substr(0, raw.find('#'));
  std::istringstream in(text);
  std::string word;
  while (in >> word) {
    auto eq = word.find('=');
    if (eq == std::string::npos) {
      if (!line.keys.empty()) throw TopologyParseError(number, "positional token '" + word + "' after key=value pairs");
      line.words.push_back(word);
    } else {
      std::string key = word.substr(0, eq);
      if (key.empty()) throw TopologyParseError(number, "empty key in '" + word + "'");
      if (!line.keys.emplace(key, word.substr(eq + 1)).second)
        throw TopologyParseError(number, "duplicate key '" + key + "'");
    }
  }
  return line;
}

Node parse_node(const Line& line) {
  if (line.words.size() != 3) throw TopologyParseError(line.number, "expected 'node <id> <kind> key=value...'");
  Node node;
  node.id = NodeId(line.words[1]);
  const std::string& kind = line.words[2];
  if (kind == "qnode") {
    KeyReader keys(line, {"ip", "channels", "encodings", "eff", "dark_hz", "clock_s", "site"});
    QNodeInfo info;
    info.ip = keys.str("ip");
    const long count = keys.integer("channels");
    if (count < 1) throw TopologyParseError(line.number, "channels must be >= 1");
    for (long i = 0; i < count; ++i) info.quantum_channels.push_back(static_cast<int>(i));
    info.supported_encodings = keys.encodings("encodings");
    info.detector.efficiency = keys.num_or("eff", info.detector.efficiency);
    info.detector.dark_rate_hz = keys.num_or("dark_hz", info.detector.dark_rate_hz);
    info.detector.time_bin_width_s = keys.num_or("clock_s", info.detector.time_bin_width_s);
    if (keys.has("site")) node.site = keys.str("site");
    node.info = std::move(info);
  } else if (kind == "eps") {
    KeyReader keys(line, {"rate", "n", "band", "grid", "encodings", "site"});
    EpsInfo info;
    info.pair_rate_hz = keys.num("rate");
    info.num_wavelengths = static_cast<int>(keys.integer("n"));
    try {
      info.band = parse_band(keys.str("band"));
    } catch (const Error& e) {
      throw TopologyParseError(line.number, e.what());
    }
    info.channel_grid = keys.channels("grid");
    info.encodings = keys.has("encodings")
                         ? keys.encodings("encodings")
                         : std::set<QubitEncoding>{QubitEncoding::Polarization, QubitEncoding::TimeBin};
    if (keys.has("site")) node.site = keys.str("site");
    node.info = std::move(info);
  } else if (kind == "switch") {
    KeyReader keys(line, {"ports", "il_db", "site"});
    SwitchInfo info;
    info.port_count = static_cast<int>(keys.integer("ports"));
    info.insertion_loss_db = keys.num("il_db");
    if (keys.has("site")) node.site = keys.str("site");
    node.info = info;
  } else {
    throw TopologyParseError(line.number, "unknown node kind '" + kind + "'");
  }
  return node;
}

Link parse_link(const Line& line) {
  if (line.words.size() != 3) throw TopologyParseError(line.number, "expected 'link <idA> <idB> key=value...'");
  KeyReader keys(line, {"len_km", "fiber_db", "il_db", "pdl_db", "classical", "fibers"});
  Link link;
  link.endpoint_a = NodeId(line.words[1]);
  link.endpoint_b = NodeId(line.words[2]);
  link.length_km = keys.num("len_km");
  link.fiber_loss_db = keys.num("fiber_db");
  link.insertion_loss_db = keys.num_or("il_db", 0.0);
  link.pdl_db = keys.num_or("pdl_db", 0.0);
  if (keys.has("classical")) link.classical_channels = keys.channels("classical");
  link.carries_classical = !link.classical_channels.empty();
  if (keys.has("fibers")) {
    link.fibers = static_cast<int>(keys.integer("fibers"));
    if (link.fibers < 1) throw TopologyParseError(line.number, "fibers must be >= 1");
  }
  return link;
}

std::string fmt(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string join_channels(const std::vector<WavelengthChannel>& channels) {
  std::string out;
  for (const auto& ch : channels) {
    if (!out.empty()) out += ',';
    out += ch.label;
  }
  return out;
}

std::string join_encodings(const std::set<QubitEncoding>& encodings) {
  std::string out;
  for (auto e : encodings) {
    if (!out.empty()) out += ',';
    out += to_string(e);
  }
  return out;
}

}  // namespace

Topology load_topology(std::string_view document) {
  std::vector<Node> nodes;
  std::vector<Link> links;
  std::istringstream in{std::string(document)};
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    Line line = tokenize(raw, number);
    if (line.words.empty()) {
      if (!line.keys.empty()) throw TopologyParseError(number, "missing declaration keyword");
      continue;
    }
    if (line.words[0] == "node") {
      nodes.push_back(parse_node(line));
    } else if (line.words[0] == "link") {
      links.push_back(parse_link(line));
    } else {
      throw TopologyParseError(number, "unknown declaration '" + line.words[0] + "'");
    }
  }
  return Topology(std::move(nodes), std::move(links));
}

Topology load_topology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open topology file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_topology(buffer.str());
}

std::string serialize_topology(const Topology& topology) {
  std::ostringstream out;
  for (const auto& [id, node] : topology.nodes()) {
    out << "node " << id << ' ' << to_string(node.kind());
    switch (node.kind()) {
      case NodeKind::QNode: {
        const auto& q = node.qnode();
        out << " ip=" << q.ip << " channels=" << q.quantum_channels.size()
            << " encodings=" << join_encodings(q.supported_encodings) << " eff=" << fmt(q.detector.efficiency)
            << " dark_hz=" << fmt(q.detector.dark_rate_hz) << " clock_s=" << fmt(q.detector.time_bin_width_s);
        break;
      }
      case NodeKind::Eps: {
        const auto& e = node.eps();
        out << " rate=" << fmt(e.pair_rate_hz) << " n=" << e.num_wavelengths << " band=" << to_string(e.band)
            << " grid=" << join_channels(e.channel_grid) << " encodings=" << join_encodings(e.encodings);
        break;
      }
      case NodeKind::Switch:
        out << " ports=" << node.sw().port_count << " il_db=" << fmt(node.sw().insertion_loss_db);
        break;
    }
    out << " site=" << node.site << '\n';
  }
  for (const auto& [key, link] : topology.links()) {
    out << "link " << link.endpoint_a << ' ' << link.endpoint_b << " len_km=" << fmt(link.length_km)
        << " fiber_db=" << fmt(link.fiber_loss_db) << " il_db=" << fmt(link.insertion_loss_db)
        << " pdl_db=" << fmt(link.pdl_db)
        << " classical=" << (link.classical_channels.empty() ? "none" : join_channels(link.classical_channels))
        << " fibers=" << link.fibers << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Path metrics

std::vector<NodeId> walk_nodes(std::span<const Link> path) {
  std::vector<NodeId> nodes;
  if (path.empty()) return nodes;
  if (path.size() == 1) return {path[0].endpoint_a, path[0].endpoint_b};
  // orient the first link away from the node it shares with the second
  const Link& first = path[0];
  const Link& second = path[1];
  NodeId current;
  if (second.touches(first.endpoint_b)) {
    nodes = {first.endpoint_a, first.endpoint_b};
  } else if (second.touches(first.endpoint_a)) {
    nodes = {first.endpoint_b, first.endpoint_a};
  } else {
    throw Error("disconnected walk at link 1 (" + second.key().str() + ")");
  }
  for (std::size_t i = 1; i < path.size(); ++i) {
    const NodeId& at = nodes.back();
    if (!path[i].touches(at))
      throw Error("disconnected walk at link " + std::to_string(i) + " (" + path[i].key().str() + ")");
    nodes.push_back(path[i].other(at));
  }
  return nodes;
}

double path_loss_db(const Topology& topology, std::span<const Link> path, bool include_pdl) {
  const std::vector<NodeId> nodes = walk_nodes(path);
  double total = 0.0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i > 0) {
      const Node& via = topology.node(nodes[i]);
      if (via.kind() == NodeKind::Switch) total += via.sw().insertion_loss_db;
    }
    total += path[i].weight(include_pdl);
  }
  return total;
}

std::vector<Link> links_along(const Topology& topology, std::span<const NodeId> nodes) {
  std::vector<Link> out;
  for (std::size_t i = 1; i < nodes.size(); ++i) out.push_back(topology.link(nodes[i - 1], nodes[i]));
  return out;
}

double path_loss_db(const Topology& topology, std::span<const NodeId> nodes, bool include_pdl) {
  double total = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (i > 1) {
      const Node& via = topology.node(nodes[i - 1]);
      if (via.kind() == NodeKind::Switch) total += via.sw().insertion_loss_db;
    }
    total += topology.link(nodes[i - 1], nodes[i]).weight(include_pdl);
  }
  return total;
}

CoexistenceReport coexistence_on(const WavelengthChannel& quantum_ch, const Link& link) {
  CoexistenceReport report;
  if (!link.carries_classical) return report;
  for (const auto& classical : link.classical_channels) {
    const double gap = quantum_ch.center_freq_thz - classical.center_freq_thz;
    if (!(gap > kCoexistenceGapThz)) {
      report.ok = false;
      report.violations.push_back({classical, gap});
    }
  }
  return report;
}

CoexistenceReport validate_coexistence(const Topology& topology, const WavelengthChannel& quantum_ch,
                                       const Link& link) {
  if (!topology.find_link(link.endpoint_a, link.endpoint_b))
    throw Error("unknown link '" + link.key().str() + "'");
  return coexistence_on(quantum_ch, link);
}

}  // namespace qnet
