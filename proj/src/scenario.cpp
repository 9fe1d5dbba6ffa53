#include "qnet/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "qnet/rwa.hpp"

namespace qnet {

namespace {

std::vector<std::string> tokens_of(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

double number(const std::string& text, int line, const char* what) {
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  if (b != e && *b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) throw ScenarioError(line, std::string("bad ") + what + " '" + text + "'");
  return v;
}

SimTime time_value(const std::string& text, int line) {
  const double s = number(text, line, "time");
  if (s < 0.0) throw ScenarioError(line, "negative time " + text);
  return seconds_to_ns(s);
}

std::map<std::string, std::string> key_values(const std::vector<std::string>& toks, std::size_t from, int line) {
  std::map<std::string, std::string> kv;
  for (std::size_t i = from; i < toks.size(); ++i) {
    const auto eq = toks[i].find('=');
    if (eq == std::string::npos || eq == 0) throw ScenarioError(line, "expected key=value, got '" + toks[i] + "'");
    if (!kv.emplace(toks[i].substr(0, eq), toks[i].substr(eq + 1)).second)
      throw ScenarioError(line, "duplicate key " + toks[i].substr(0, eq));
  }
  return kv;
}

std::string_view strip_comment(std::string_view line) {
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  return line;
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  Scenario sc;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    const auto toks = tokens_of(strip_comment(raw));
    if (toks.empty()) continue;
    if (toks[0] != "at" || toks.size() < 3) throw ScenarioError(lineno, "expected 'at <t> <event> ...'");

    ScenarioEvent ev;
    ev.line = lineno;
    ev.at = time_value(toks[1], lineno);
    const std::string& kind = toks[2];
    if (kind == "request") {
      auto kv = key_values(toks, 3, lineno);
      static const char* kAllowed[] = {"qubit", "from", "to", "basis", "start", "end", "ebits"};
      for (const auto& [k, v] : kv)
        if (std::find(std::begin(kAllowed), std::end(kAllowed), k) == std::end(kAllowed))
          throw ScenarioError(lineno, "unknown key " + k);
      for (const char* req : {"qubit", "from", "to", "basis", "start", "end"})
        if (!kv.contains(req)) throw ScenarioError(lineno, std::string("missing key ") + req);
      EntanglementRequest r;
      try {
        r.qubit_type = parse_encoding(kv["qubit"]);
      } catch (const Error& e) {
        throw ScenarioError(lineno, e.what());
      }
      r.qnode_1 = NodeId(kv["from"]);
      r.qnode_2 = NodeId(kv["to"]);
      r.calib_basis = kv["basis"];
      r.start_time = time_value(kv["start"], lineno);
      r.end_time = time_value(kv["end"], lineno);
      if (kv.contains("ebits")) {
        const double n = number(kv["ebits"], lineno, "ebits");
        if (n < 0 || n != static_cast<double>(static_cast<std::uint64_t>(n)))
          throw ScenarioError(lineno, "ebits must be a non-negative integer");
        r.target_ebits = static_cast<std::uint64_t>(n);
      }
      ev.what = RequestEvent{r};
    } else if (kind == "drift") {
      if (toks.size() != 5) throw ScenarioError(lineno, "expected 'at <t> drift <A>/<B> <+dB>'");
      const auto slash = toks[3].find('/');
      if (slash == std::string::npos || slash == 0 || slash + 1 == toks[3].size())
        throw ScenarioError(lineno, "link must be written <A>/<B>");
      ev.what = DriftEvent{LinkKey::of(NodeId(toks[3].substr(0, slash)), NodeId(toks[3].substr(slash + 1))),
                           number(toks[4], lineno, "drift")};
    } else if (kind == "down") {
      if (toks.size() != 4) throw ScenarioError(lineno, "expected 'at <t> down <node>'");
      ev.what = DownEvent{NodeId(toks[3])};
    } else if (kind == "leak") {
      if (toks.size() != 5) throw ScenarioError(lineno, "expected 'at <t> leak <qnode> <Hz>'");
      const double hz = number(toks[4], lineno, "rate");
      if (hz < 0.0) throw ScenarioError(lineno, "negative leakage rate");
      ev.what = LeakEvent{NodeId(toks[3]), hz};
    } else {
      throw ScenarioError(lineno, "unknown event '" + kind + "'");
    }
    sc.events.push_back(std::move(ev));
  }
  return sc;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

void validate_scenario(const Scenario& scenario, const Topology& topology) {
  for (const auto& ev : scenario.events) {
    const auto need = [&](const NodeId& n) {
      if (!topology.has_node(n)) throw ScenarioError(ev.line, "unknown node " + n.str());
    };
    if (const auto* r = std::get_if<RequestEvent>(&ev.what)) {
      need(r->request.qnode_1);
      need(r->request.qnode_2);
      if (topology.node(r->request.qnode_1).kind() != NodeKind::QNode)
        throw ScenarioError(ev.line, r->request.qnode_1.str() + " is not a Q-node");
    } else if (const auto* d = std::get_if<DriftEvent>(&ev.what)) {
      if (!topology.find_link(d->link.a, d->link.b)) throw ScenarioError(ev.line, "unknown link " + d->link.str());
    } else if (const auto* dn = std::get_if<DownEvent>(&ev.what)) {
      need(dn->node);
    } else if (const auto* lk = std::get_if<LeakEvent>(&ev.what)) {
      need(lk->node);
      if (topology.node(lk->node).kind() != NodeKind::QNode)
        throw ScenarioError(ev.line, lk->node.str() + " is not a Q-node");
    }
  }
}

std::vector<RwaRequest> parse_rwa_requests(std::string_view text) {
  std::vector<RwaRequest> out;
  std::istringstream in{std::string(text)};
  int lineno = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++lineno;
    const auto toks = tokens_of(strip_comment(raw));
    if (toks.empty()) continue;
    if (toks.size() != 4 || toks[0] != "request")
      throw ScenarioError(lineno, "expected 'request <eps> <qnode1> <qnode2>'");
    out.push_back(RwaRequest{NodeId(toks[1]), NodeId(toks[2]), NodeId(toks[3]), lineno});
  }
  return out;
}

std::vector<std::string> solve_rwa_requests(const Topology& topology, const std::vector<RwaRequest>& requests,
                                            std::size_t k_paths) {
  ChannelLedger ledger(topology);
  SessionId next = 1;
  std::vector<std::string> out;
  for (const auto& r : requests) {
    for (const auto& n : {r.eps, r.qnode_1, r.qnode_2})
      if (!topology.has_node(n)) throw ScenarioError(r.line, "unknown node " + n.str());
    const auto res = assign_pair(topology, ledger, r.eps, r.qnode_1, r.qnode_2, RouteMetric{}, next++, k_paths);
    if (const auto* a = std::get_if<PairAssignment>(&res)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "ASSIGNED %s %s loss1=%.3f loss2=%.3f", a->signal_ch.label.c_str(),
                    a->idler_ch.label.c_str(), a->path_1.total_loss_db, a->path_2.total_loss_db);
      out.emplace_back(buf);
    } else {
      out.push_back("BLOCKED " + std::string(to_string(std::get<Blocked>(res).cause)));
    }
  }
  return out;
}

}  // namespace qnet
