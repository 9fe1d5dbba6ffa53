#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "qnet/rwa.hpp"
#include "qnet/scenario.hpp"
#include "test_support.hpp"

using namespace qnet;

namespace {

std::vector<NodeId> ids(std::initializer_list<const char*> names) {
  std::vector<NodeId> out;
  for (const char* n : names) out.emplace_back(n);
  return out;
}

const char* kTriangle = R"(
node A switch ports=8 il_db=0
node B switch ports=8 il_db=0
node C switch ports=8 il_db=0
link A B len_km=1 fiber_db=1
link B C len_km=1 fiber_db=1
link A C len_km=1 fiber_db=3
)";

}  // namespace

TEST_CASE("shortest_path basics") {
  const auto chain = load_topology(R"(
node A switch ports=8 il_db=0
node B switch ports=8 il_db=0
node C switch ports=8 il_db=0
link A B len_km=1 fiber_db=1
link B C len_km=1 fiber_db=1
)");
  RouteMetric m;
  auto p = shortest_path(chain, m, NodeId("A"), NodeId("C"));
  REQUIRE(p);
  CHECK(p->nodes == ids({"A", "B", "C"}));
  CHECK(k_shortest_paths(chain, m, NodeId("A"), NodeId("C"), 3).size() == 1);

  const auto tri = load_topology(kTriangle);
  p = shortest_path(tri, m, NodeId("A"), NodeId("C"));
  REQUIRE(p);
  CHECK(p->weight == 2.0);
  CHECK(p->nodes.size() == 3);
  const auto two = k_shortest_paths(tri, m, NodeId("A"), NodeId("C"), 2);
  REQUIRE(two.size() == 2);
  CHECK(two[0].weight == 2.0);
  CHECK(two[1].weight == 3.0);
  CHECK(two[1].nodes == ids({"A", "C"}));

  CHECK_THROWS_AS(shortest_path(tri, m, NodeId("A"), NodeId("A")), Error);
  CHECK_THROWS_AS(shortest_path(tri, m, NodeId("A"), NodeId("Z")), Error);
  CHECK_THROWS_AS(k_shortest_paths(tri, m, NodeId("A"), NodeId("C"), 0), Error);
}

TEST_CASE("unreachable destination") {
  const auto t = load_topology("node A switch ports=8 il_db=0\nnode B switch ports=8 il_db=0\n");
  CHECK_FALSE(shortest_path(t, RouteMetric{}, NodeId("A"), NodeId("B")));
}

TEST_CASE("ties broken by node-id sequence") {
  const auto t = load_topology(R"(
node A switch ports=8 il_db=0
node X switch ports=8 il_db=0
node M switch ports=8 il_db=0
node Z switch ports=8 il_db=0
link A X len_km=1 fiber_db=1
link X Z len_km=1 fiber_db=1
link A M len_km=1 fiber_db=1
link M Z len_km=1 fiber_db=1
)");
  const auto p = shortest_path(t, RouteMetric{}, NodeId("A"), NodeId("Z"));
  REQUIRE(p);
  CHECK(p->nodes == ids({"A", "M", "Z"}));
}

TEST_CASE("pdl only counts when the metric asks for it") {
  const auto t = load_topology(R"(
node A switch ports=8 il_db=0
node B switch ports=8 il_db=0
node C switch ports=8 il_db=0
link A C len_km=1 fiber_db=1 pdl_db=5
link A B len_km=1 fiber_db=1
link B C len_km=1 fiber_db=1
)");
  RouteMetric m;
  CHECK(shortest_path(t, m, NodeId("A"), NodeId("C"))->nodes.size() == 2);
  m.include_pdl = true;
  CHECK(shortest_path(t, m, NodeId("A"), NodeId("C"))->nodes.size() == 3);
}

TEST_CASE("routes never pass through a Q-node") {
  const auto t = load_topology(R"(
node A switch ports=8 il_db=0
node Q qnode ip=10.0.0.1 channels=1 encodings=pol
node B switch ports=8 il_db=0
link A Q len_km=1 fiber_db=0
link Q B len_km=1 fiber_db=0
link A B len_km=1 fiber_db=9
)");
  const auto p = shortest_path(t, RouteMetric{}, NodeId("A"), NodeId("B"));
  REQUIRE(p);
  CHECK(p->nodes == ids({"A", "B"}));
}

TEST_CASE("oracle: shortest path and top-k on random graphs") {
  std::mt19937_64 g(2024);
  int checked = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const int n = std::uniform_int_distribution<int>(3, 8)(g);
    const auto t = load_topology(oracle::random_graph(g, n, 0.45));
    const bool pdl = trial % 3 == 0;
    RouteMetric m;
    m.include_pdl = pdl;
    const NodeId src("n0"), dst("n1");
    const auto brute = oracle::simple_routes(t, src, dst, pdl);
    const auto got = shortest_path(t, m, src, dst);
    REQUIRE(got.has_value() == !brute.empty());
    if (!got) continue;
    ++checked;
    CHECK(got->weight == brute.front().weight);
    CHECK(got->nodes == brute.front().nodes);
    const auto k = k_shortest_paths(t, m, src, dst, 4);
    REQUIRE(k.size() == std::min<std::size_t>(4, brute.size()));
    for (std::size_t i = 0; i < k.size(); ++i) {
      CHECK(k[i].weight == brute[i].weight);
      CHECK(k[i].nodes == brute[i].nodes);
    }
  }
  CHECK(checked >= 100);
}

TEST_CASE("first fit on an empty ledger picks the outermost pair") {
  const auto t = load_topology(kStar);
  ChannelLedger ledger(t);
  const auto r = assign_pair(t, ledger, NodeId("E"), NodeId("QA"), NodeId("QB"), RouteMetric{}, 1);
  REQUIRE(std::holds_alternative<PairAssignment>(r));
  const auto& a = std::get<PairAssignment>(r);
  CHECK(a.signal_index == 1);
  CHECK(a.idler_index == 8);
  CHECK(a.signal_ch.label == "O80");
  CHECK(a.idler_ch.label == "O87");
  CHECK(a.path_1.total_loss_db == doctest::Approx(2 + 1 + 3));
  CHECK(a.path_2.total_loss_db == doctest::Approx(2 + 1 + 4));
  CHECK(a.endpoint_1.node_ip == "10.0.0.1");
  CHECK(a.cross_connects.size() == 2);
}

TEST_CASE("N/2 capacity: fifth pair is blocked with no_channel") {
  const auto t = load_topology_file(fixture("cap.topo"));
  ChannelLedger ledger(t);
  const char* q[] = {"Q01", "Q02", "Q03", "Q04", "Q05", "Q06", "Q07", "Q08", "Q09", "Q10"};
  for (int i = 0; i < 4; ++i) {
    const auto r = assign_pair(t, ledger, NodeId("EPS"), NodeId(q[2 * i]), NodeId(q[2 * i + 1]), RouteMetric{},
                               static_cast<SessionId>(i + 1));
    REQUIRE(std::holds_alternative<PairAssignment>(r));
    CHECK(std::get<PairAssignment>(r).signal_index == i + 1);
  }
  const ChannelLedger before = ledger;
  const auto r = assign_pair(t, ledger, NodeId("EPS"), NodeId("Q09"), NodeId("Q10"), RouteMetric{}, 5);
  REQUIRE(std::holds_alternative<Blocked>(r));
  CHECK(std::get<Blocked>(r).cause == BlockCause::NoChannel);
  CHECK(ledger == before);
  CHECK(ledger.active_pairs(NodeId("EPS")) == 4);
}

TEST_CASE("coexistence: C-band over a C-band classical link is blocked") {
  const auto t = fig1();
  ChannelLedger ledger(t);
  const auto r = assign_pair(t, ledger, NodeId("FNAL-EPS"), NodeId("FNAL-Q1"), NodeId("ANL-Q1"), RouteMetric{}, 1);
  REQUIRE(std::holds_alternative<Blocked>(r));
  CHECK(std::get<Blocked>(r).cause == BlockCause::Coexistence);
  const auto ok = assign_pair(t, ledger, NodeId("NU-EPS"), NodeId("FNAL-Q1"), NodeId("ANL-Q1"), RouteMetric{}, 2);
  CHECK(std::holds_alternative<PairAssignment>(ok));
}

TEST_CASE("release restores the ledger and rejects a second release") {
  const auto t = load_topology(kStar);
  ChannelLedger ledger(t);
  const ChannelLedger empty = ledger;
  REQUIRE(std::holds_alternative<PairAssignment>(
      assign_pair(t, ledger, NodeId("E"), NodeId("QA"), NodeId("QB"), RouteMetric{}, 7)));
  CHECK_FALSE(ledger == empty);
  release_assignment(ledger, 7);
  CHECK(ledger == empty);
  CHECK_THROWS_AS(release_assignment(ledger, 7), UnknownAssignmentError);
}

TEST_CASE("port reservation forces the second-best route") {
  const auto t = load_topology(R"(
node E  eps rate=1e6 n=2 band=O grid=O80,O81
node S1 switch ports=8 il_db=1
node S2 switch ports=8 il_db=1
node S3 switch ports=8 il_db=1
node QA qnode ip=10.0.0.1 channels=1 encodings=pol
node QB qnode ip=10.0.0.2 channels=1 encodings=pol
link E  S1 len_km=1 fiber_db=1 fibers=2
link QA S1 len_km=1 fiber_db=1
link S1 S2 len_km=1 fiber_db=1
link S2 QB len_km=1 fiber_db=1
link S1 S3 len_km=1 fiber_db=2
link S3 QB len_km=1 fiber_db=2
)");
  ChannelLedger ledger(t);
  ledger.reserve_strand(LinkKey::of(NodeId("S1"), NodeId("S2")), 0, kReservationBase);
  RouteMetric m;
  CHECK(std::get<Blocked>(assign_pair(t, ledger, NodeId("E"), NodeId("QA"), NodeId("QB"), m, 1, 1)).cause ==
        BlockCause::NoPath);
  const auto r = assign_pair(t, ledger, NodeId("E"), NodeId("QA"), NodeId("QB"), m, 1, 2);
  REQUIRE(std::holds_alternative<PairAssignment>(r));
  CHECK(std::get<PairAssignment>(r).path_2.nodes == ids({"E", "S1", "S3", "QB"}));
  CHECK_FALSE(ledger.inconsistency());
}

TEST_CASE("oracle: assign_pair succeeds whenever some assignment exists") {
  std::mt19937_64 g(99);
  int feasible = 0, infeasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto t = load_topology(oracle::random_rwa_instance(g));
    ChannelLedger ledger(t);
    const auto qs = t.nodes_of_kind(NodeKind::QNode);
    SessionId sid = 1;
    oracle::ResourceModel model;
    // a short random request sequence; each request is compared with the oracle
    for (int step = 0; step < 6; ++step) {
      const NodeId q1 = qs[g() % qs.size()];
      NodeId q2 = qs[g() % qs.size()];
      if (q1 == q2) continue;
      const bool exists = oracle::any_assignment(t, ledger, NodeId("E"), q1, q2);
      const ChannelLedger before = ledger;
      const auto r = assign_pair(t, ledger, NodeId("E"), q1, q2, RouteMetric{}, sid);
      CHECK(std::holds_alternative<PairAssignment>(r) == exists);
      if (const auto* a = std::get_if<PairAssignment>(&r)) {
        ++feasible;
        CHECK(oracle::combination_feasible(t, before, NodeId("E"), q1, q2, a->path_1.nodes, a->path_2.nodes,
                                           a->signal_index));
        CHECK(a->idler_index == t.node(NodeId("E")).eps().num_wavelengths + 1 - a->signal_index);
        model.add(*a);
        ++sid;
      } else {
        ++infeasible;
        CHECK(ledger == before);
      }
      CHECK(model.exclusive());
      CHECK_FALSE(ledger.inconsistency());
    }
  }
  CHECK(feasible > 100);
  CHECK(infeasible > 10);
}

TEST_CASE("model check: interleaved assign and release") {
  std::mt19937_64 g(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto t = load_topology(oracle::random_rwa_instance(g));
    ChannelLedger ledger(t);
    const auto qs = t.nodes_of_kind(NodeKind::QNode);
    oracle::ResourceModel model;
    std::map<SessionId, PairAssignment> live;
    SessionId next = 1;
    for (int step = 0; step < 20; ++step) {
      if (!live.empty() && g() % 3 == 0) {
        auto it = std::next(live.begin(), static_cast<long>(g() % live.size()));
        release_assignment(ledger, it->first);
        model.remove(it->second);
        live.erase(it);
      } else {
        const NodeId q1 = qs[g() % qs.size()], q2 = qs[g() % qs.size()];
        if (q1 == q2) continue;
        const auto r = assign_pair(t, ledger, NodeId("E"), q1, q2, RouteMetric{}, next);
        if (const auto* a = std::get_if<PairAssignment>(&r)) {
          live.emplace(next++, *a);
          model.add(*a);
        }
      }
      REQUIRE_FALSE(ledger.inconsistency());
      CHECK(model.exclusive());
      CHECK(ledger.active().size() == live.size());
      CHECK(ledger.active_pairs(NodeId("E")) <= t.node(NodeId("E")).eps().capacity());
    }
  }
}

TEST_CASE("assign_pair is deterministic") {
  const auto t = fig1();
  ChannelLedger a(t), b(t);
  const auto ra = assign_pair(t, a, NodeId("NU-EPS"), NodeId("ANL-Q1"), NodeId("FNAL-Q1"), RouteMetric{}, 3);
  const auto rb = assign_pair(t, b, NodeId("NU-EPS"), NodeId("ANL-Q1"), NodeId("FNAL-Q1"), RouteMetric{}, 3);
  CHECK(ra == rb);
  CHECK(a == b);
}

TEST_CASE("rwa request list parsing") {
  const auto reqs = parse_rwa_requests("# c\nrequest E QA QB\n\nrequest E QB QA\n");
  REQUIRE(reqs.size() == 2);
  CHECK(reqs[1].line == 4);
  CHECK_THROWS_AS(parse_rwa_requests("request E QA\n"), ScenarioError);
}
