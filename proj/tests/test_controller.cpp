#include <doctest.h>

#include <memory>
#include <sstream>

#include "fake_context.hpp"
#include "qnet/controller.hpp"
#include "qnet/simulation.hpp"
#include "test_support.hpp"

using namespace qnet;

namespace {

std::unique_ptr<Simulation> run(const Topology& topo, const std::string& scenario, SimConfig cfg = {}) {
  auto sim = std::make_unique<Simulation>(topo, parse_scenario(scenario), cfg);
  sim->run();
  return sim;
}

std::vector<std::string> fields(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

// (kind, receiver) pairs of a trace, optionally for one session
std::vector<std::pair<std::string, std::string>> kinds(const std::vector<std::string>& trace,
                                                       const std::string& session = "") {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& l : trace) {
    auto f = fields(l);
    if (session.empty() || f[4] == session) out.emplace_back(f[5], f[3]);
  }
  return out;
}

std::string state_of(const Simulation& sim, SessionId id) {
  return sim.report().sessions.at(id - 1).state;
}

const char* kNominal =
    "at 0 request qubit=pol from=ANL-Q1 to=FNAL-Q1 basis=HV start=0 end=120 ebits=1000\n";

}  // namespace

TEST_CASE("discovery: single switch with two Q-nodes gives a 3-node star") {
  const Topology t = load_topology(R"(
node S  switch ports=8 il_db=1
node QA qnode ip=10.0.0.1 channels=1 encodings=pol
node QB qnode ip=10.0.0.2 channels=1 encodings=pol
link QA S len_km=1 fiber_db=1
link QB S len_km=1 fiber_db=1
)");
  World world(t, 0);
  FakeContext ctx(world, SimConfig{}, "S");
  SwitchAgent sw = make_switch_agent(t, NodeId("S"));
  sw.on_message(make_message(MsgKind::DiscoverQuery, kControllerId, "S", 0), ctx);
  REQUIRE(ctx.sent.size() == 1);
  const auto& body = ctx.sent[0].body<DiscoverBody>();
  const Topology d = discover_topology({body});
  CHECK(d.nodes().size() == 3);
  CHECK(d.links().size() == 2);
  CHECK(d == t);
}

TEST_CASE("discovery of fig1 through the switch agents equals the loaded fixture") {
  auto sim = run(fig1(), kNominal);
  CHECK(sim->controller().discovered());
  CHECK(sim->controller().unreachable_switches().empty());
  CHECK(sim->controller().topology() == fig1());
}

TEST_CASE("discovery with a switch down marks its links and routes avoid it") {
  auto sim = run(fig1(), std::string("at 0 down SL-SW\n") + kNominal);
  const auto& c = sim->controller();
  CHECK(c.unreachable_switches() == std::set<NodeId>{NodeId("SL-SW")});
  int touching = 0;
  for (const auto& [key, st] : c.link_status()) {
    if (key.a == NodeId("SL-SW") || key.b == NodeId("SL-SW")) {
      ++touching;
      CHECK(st.down);
    } else {
      CHECK_FALSE(st.down);
    }
  }
  CHECK(touching == 3);
  CHECK(state_of(*sim, 1) == "Complete");
  for (const auto& l : sim->report().trace) {
    if (l.find("DiscoverQuery") != std::string::npos) continue;
    CHECK(l.find("SL-SW") == std::string::npos);
  }
}

TEST_CASE("admission rejects") {
  SUBCASE("same node twice") {
    auto sim = run(fig1(), "at 0 request qubit=pol from=ANL-Q1 to=ANL-Q1 basis=HV start=0 end=10\n");
    CHECK(state_of(*sim, 1) == "Rejected(invalid_pair)");
  }
  SUBCASE("second endpoint is not a Q-node") {
    auto sim = run(fig1(), "at 0 request qubit=pol from=ANL-Q1 to=ANL-SW basis=HV start=0 end=10\n");
    CHECK(state_of(*sim, 1) == "Rejected(invalid_pair)");
  }
  SUBCASE("empty window") {
    auto sim = run(fig1(), "at 0 request qubit=pol from=ANL-Q1 to=FNAL-Q1 basis=HV start=10 end=5\n");
    CHECK(state_of(*sim, 1) == "Rejected(invalid_window)");
  }
  SUBCASE("window already over") {
    auto sim = run(fig1(), "at 3 request qubit=pol from=ANL-Q1 to=FNAL-Q1 basis=HV start=0 end=2\n");
    CHECK(state_of(*sim, 1) == "Rejected(invalid_window)");
  }
  SUBCASE("encoding not supported by the Q-nodes") {
    auto sim = run(load_topology_file(fixture("cap.topo")),
                   "at 0 request qubit=timebin from=Q01 to=Q02 basis=Z start=0 end=10\n");
    CHECK(state_of(*sim, 1) == "Rejected(unsupported_encoding)");
  }
  SUBCASE("basis of the other encoding") {
    auto sim = run(fig1(), "at 0 request qubit=pol from=ANL-Q1 to=FNAL-Q1 basis=Z start=0 end=10\n");
    CHECK(state_of(*sim, 1) == "Rejected(invalid_basis)");
  }
}

TEST_CASE("five requests against one N=8 source: four admitted, one rejected") {
  auto sim = run(load_topology_file(fixture("cap.topo")), read_file(fixture("cap.scn")));
  const auto rep = sim->report();
  REQUIRE(rep.sessions.size() == 5);
  int complete = 0, no_eps = 0;
  for (const auto& s : rep.sessions) {
    complete += s.state == "Complete";
    no_eps += s.state == "Rejected(no_eps)";
  }
  CHECK(complete == 4);
  CHECK(no_eps == 1);
  CHECK(sim->controller().counters().admitted == 4);
  CHECK(*rep.metric("blocking_ratio") == "0.200000");
}

TEST_CASE("supervision of a nominal session") {
  auto sim = run(fig1(), kNominal);
  const auto rep = sim->report();
  CHECK(state_of(*sim, 1) == "Complete");
  const auto msgs = kinds(rep.trace, "1");
  int paths = 0, starts = 0, ends_to_eps = 0, readies = 0;
  for (const auto& [kind, to] : msgs) {
    paths += kind == "PathsEstablished";
    readies += kind == "Ready" && to == "controller";
    if (kind == "Start") {
      ++starts;
      CHECK(to == "NU-EPS");
    }
    ends_to_eps += kind == "End" && to == "NU-EPS";
  }
  CHECK(paths == 3);
  CHECK(readies == 3);
  CHECK(starts == 1);
  CHECK(ends_to_eps == 1);
  CHECK(sim->controller().ledger().active().empty());
  CHECK(*rep.metric("orphan_cross_connects") == "0");
  CHECK(rep.sweep_violations == 0);
  CHECK(sim->controller().results().contains(1));
}

TEST_CASE("exactly one START per session that reached Ready") {
  for (const char* name : {"timebin.scn", "cap.scn", "reroute.scn"}) {
    const bool cap = std::string(name) == "cap.scn";
    auto sim = run(cap ? load_topology_file(fixture("cap.topo")) : fig1(), read_file(fixture(name)));
    for (const auto& [id, s] : sim->controller().sessions()) {
      int starts = 0;
      for (const auto& [kind, to] : kinds(sim->report().trace, std::to_string(id))) starts += kind == "Start";
      CHECK(starts == (s.ready_entries > 0 ? 1 : 0));
      CHECK(s.ready_entries <= 1);
    }
  }
}

TEST_CASE("a Q-node crash during calibration times out and frees the channels") {
  auto sim = run(fig1(), read_file(fixture("down.scn")));
  CHECK(state_of(*sim, 1) == "Failed(timeout)");
  CHECK(sim->controller().ledger().active().empty());
  CHECK(sim->report().sweep_violations == 0);
}

TEST_CASE("a cut core with no alternative fails after the retry limit") {
  SimConfig cfg;
  cfg.session.max_retries = 2;
  auto sim = run(load_topology_file(fixture("chain.topo")), read_file(fixture("chain_fail.scn")), cfg);
  const auto s = sim->report().sessions.at(0);
  CHECK(s.state == "Failed(exhausted)");
  CHECK(s.retries == 2);
}

TEST_CASE("monitor") {
  SUBCASE("no drift leaves every status at its baseline") {
    auto sim = run(fig1(), kNominal);
    CHECK(sim->controller().counters().monitor_ticks > 0);
    for (const auto& [key, st] : sim->controller().link_status()) {
      CHECK_FALSE(st.degraded);
      CHECK_FALSE(st.down);
      CHECK(st.current_db == st.baseline_db);
    }
  }
  SUBCASE("+5 dB on the dark fiber moves the next session through ANL") {
    const std::string first = "at 0 request qubit=pol from=NU-Q1 to=NU-Q2 basis=HV start=0 end=60 ebits=10\n";
    const std::string second = "at 5 request qubit=pol from=ANL-Q1 to=FNAL-Q1 basis=HV start=5 end=120 ebits=100\n";
    const auto path2_of = [](const Simulation& sim) {
      for (const auto& l : sim.report().trace)
        if (l.find(" 2 PathsEstablished") != std::string::npos) return l.substr(l.find("path2="));
      return std::string();
    };
    auto clean = run(fig1(), first + second);
    CHECK(path2_of(*clean).find("SL-SW") != std::string::npos);

    auto drifted = run(fig1(), first + "at 1 drift FNAL-SW/SL-SW +5\n" + second);
    const auto& st = drifted->controller().link_status().at(LinkKey::of(NodeId("FNAL-SW"), NodeId("SL-SW")));
    CHECK(st.degraded);
    CHECK(st.current_db == doctest::Approx(st.baseline_db + 5.0));
    const auto p = path2_of(*drifted);
    CHECK(p.find("NU-SW,ANL-SW,FNAL-SW") != std::string::npos);
    CHECK(p.find("SL-SW") == std::string::npos);
    CHECK(state_of(*drifted, 2) == "Complete");
  }
  SUBCASE("degraded links are still usable") {
    const Topology t = load_topology(kStar);
    std::string sc;
    for (const auto& [key, link] : t.links()) sc += "at 0 drift " + key.a.str() + "/" + key.b.str() + " +4\n";
    sc += "at 1 request qubit=pol from=QA to=QB basis=HV start=1 end=60 ebits=100\n";
    auto sim = run(t, sc);
    for (const auto& [key, st] : sim->controller().link_status()) CHECK(st.degraded);
    CHECK(sim->controller().counters().admitted == 1);
    CHECK(state_of(*sim, 1) == "Complete");
  }
}

TEST_CASE("future start: resources are taken at the start time") {
  auto sim = run(fig1(), "at 0 request qubit=pol from=FNAL-Q1 to=FNAL-Q2 basis=DA start=2 end=60 ebits=100\n");
  bool seen = false;
  for (const auto& l : sim->report().trace) {
    if (l.find("PathsEstablished") == std::string::npos) continue;
    seen = true;
    CHECK(l.rfind("2.000000000", 0) == 0);
  }
  CHECK(seen);
  CHECK(state_of(*sim, 1) == "Complete");
}

TEST_CASE("select_eps") {
  const Topology t = fig1();
  const ChannelLedger ledger(t);
  SUBCASE("local pair at FNAL uses the FNAL source") {
    auto r = select_eps(t, ledger, NodeId("FNAL-Q1"), NodeId("FNAL-Q2"), QubitEncoding::Polarization, {});
    REQUIRE(std::holds_alternative<EpsChoice>(r));
    CHECK(std::get<EpsChoice>(r).eps == NodeId("FNAL-EPS"));
  }
  SUBCASE("cross-site pair needs the O-band source") {
    auto r = select_eps(t, ledger, NodeId("ANL-Q1"), NodeId("FNAL-Q1"), QubitEncoding::Polarization, {});
    REQUIRE(std::holds_alternative<EpsChoice>(r));
    CHECK(std::get<EpsChoice>(r).eps == NodeId("NU-EPS"));
  }
  SUBCASE("every source unusable reports no_path") {
    RouteMetric m;
    m.unusable_nodes = {NodeId("FNAL-EPS"), NodeId("NU-EPS")};
    auto r = select_eps(t, ledger, NodeId("ANL-Q1"), NodeId("FNAL-Q1"), QubitEncoding::Polarization, m);
    REQUIRE(std::holds_alternative<Blocked>(r));
    CHECK(std::get<Blocked>(r).cause == BlockCause::NoPath);
  }
}

TEST_CASE("result store is write-once") {
  ResultStore store;
  SessionRecord r;
  r.id = 7;
  store.post(r);
  CHECK(store.contains(7));
  CHECK_THROWS_AS(store.post(r), DuplicateResultError);
  CHECK(store.records().size() == 1);
}

TEST_CASE("property: resource sweep holds at every event of every fixture scenario") {
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"fig1.topo", "nominal.scn"}, {"fig1.topo", "timebin.scn"},  {"fig1.topo", "reroute.scn"},
      {"fig1.topo", "down.scn"},    {"chain.topo", "chain_fail.scn"}, {"cap.topo", "cap.scn"}};
  for (const auto& [topo, scn] : runs) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      SimConfig cfg;
      cfg.master_seed = seed;
      auto sim = run(load_topology_file(fixture(topo)), read_file(fixture(scn)), cfg);
      const auto rep = sim->report();
      INFO(scn, " seed ", seed, " ", rep.first_violation);
      CHECK(rep.sweep_violations == 0);
      CHECK(*rep.metric("orphan_cross_connects") == "0");
      CHECK(*rep.metric("port_conflicts") == "0");
      CHECK(*rep.metric("protocol_violations") == "0");
      CHECK(sim->controller().ledger().active().empty());
    }
  }
}
