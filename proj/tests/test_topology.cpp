#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "qnet/topology.hpp"
#include "test_support.hpp"

using namespace qnet;

TEST_CASE("minimal EPS-switch-qnode document") {
  const auto t = load_topology(R"(
node E eps rate=1e6 n=2 band=C grid=C21,C22
node S switch ports=4 il_db=1
node Q qnode ip=10.0.0.1 channels=1 encodings=pol
link E S len_km=1 fiber_db=0.2 fibers=2
link S Q len_km=1 fiber_db=0.2
)");
  CHECK(t.nodes().size() == 3);
  CHECK(t.links().size() == 2);
  CHECK(t.node(NodeId("E")).eps().capacity() == 1);
}

TEST_CASE("dangling link names the missing node") {
  try {
    load_topology("node S switch ports=4 il_db=1\nlink S X len_km=1 fiber_db=1\n");
    FAIL("expected a validation error");
  } catch (const TopologyValidationError& e) {
    CHECK(e.entity() == "X");
  }
}

TEST_CASE("validation errors") {
  SUBCASE("odd N") {
    CHECK_THROWS_AS(load_topology("node E eps rate=1 n=3 band=C grid=C21,C22,C23\n"), TopologyValidationError);
  }
  SUBCASE("M <= N") {
    CHECK_THROWS_AS(load_topology("node E eps rate=1 n=4 band=C grid=C21,C22,C23,C24\n"
                                  "node S switch ports=4 il_db=1\n"
                                  "link E S len_km=1 fiber_db=1 fibers=4\n"),
                    TopologyValidationError);
  }
  SUBCASE("duplicate ip") {
    CHECK_THROWS_AS(load_topology("node A qnode ip=10.0.0.1 channels=1 encodings=pol\nnode B qnode ip=10.0.0.1 channels=1 encodings=pol\n"),
                    TopologyValidationError);
  }
  SUBCASE("self loop") {
    CHECK_THROWS_AS(load_topology("node S switch ports=4 il_db=1\nlink S S len_km=1 fiber_db=1\n"),
                    TopologyValidationError);
  }
  SUBCASE("grid channel outside band") {
    CHECK_THROWS_AS(load_topology("node E eps rate=1 n=2 band=O grid=C21,C22\n"), TopologyValidationError);
  }
}

TEST_CASE("parse errors carry the line number") {
  try {
    load_topology("# header\nnode S switch ports=4 il_db=1 colour=red\n");
    FAIL("expected a parse error");
  } catch (const TopologyParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(load_topology("node S switch ports=four il_db=1\n"), TopologyParseError);
  CHECK_THROWS_AS(load_topology("wire A B\n"), TopologyParseError);
  CHECK_THROWS_AS(load_topology("node S switch ports=4 ports=5 il_db=1\n"), TopologyParseError);
}

TEST_CASE("fig1 fixture: four sites, meshed core") {
  const auto t = fig1();
  CHECK(t.site_count() == 4);
  CHECK(t.nodes_of_kind(NodeKind::Switch).size() == 4);
  CHECK(t.nodes_of_kind(NodeKind::Eps).size() == 2);
  CHECK(t.nodes_of_kind(NodeKind::QNode).size() == 6);
  const auto* dark = t.find_link(NodeId("FNAL-SW"), NodeId("SL-SW"));
  REQUIRE(dark);
  CHECK_FALSE(dark->carries_classical);

  // degree of the hub counted straight from the fixture text
  const std::string text = read_file(fixture("fig1.topo"));
  std::istringstream in(text);
  std::size_t degree = 0;
  for (std::string line; std::getline(in, line);) {
    std::istringstream ls(line);
    std::string kw, a, b;
    ls >> kw >> a >> b;
    if (kw == "link" && (a == "SL-SW" || b == "SL-SW")) ++degree;
  }
  CHECK(t.neighbors(NodeId("SL-SW")).size() == degree);
  CHECK(degree == 3);
}

TEST_CASE("neighbors") {
  const auto t = load_topology(R"(
node A switch ports=4 il_db=1
node B switch ports=4 il_db=1
node C switch ports=4 il_db=1
node D switch ports=4 il_db=1
link A B len_km=1 fiber_db=1
link B C len_km=1 fiber_db=1
)");
  CHECK(t.neighbors(NodeId("D")).empty());
  CHECK(t.neighbors(NodeId("B")).size() == 2);
  CHECK_THROWS_AS(t.neighbors(NodeId("Z")), Error);
}

TEST_CASE("path_loss_db") {
  const auto t = load_topology(R"(
node A qnode ip=10.0.0.1 channels=1 encodings=pol
node S switch ports=4 il_db=1
node B qnode ip=10.0.0.2 channels=1 encodings=pol
link A S len_km=1 fiber_db=2
link S B len_km=1 fiber_db=3
)");
  CHECK(path_loss_db(t, std::span<const Link>{}) == 0.0);
  const std::vector<Link> walk{t.link(NodeId("A"), NodeId("S")), t.link(NodeId("S"), NodeId("B"))};
  CHECK(path_loss_db(t, walk) == doctest::Approx(6.0));
  const std::vector<Link> broken{t.link(NodeId("A"), NodeId("S")), t.link(NodeId("A"), NodeId("S"))};
  CHECK_NOTHROW(path_loss_db(t, std::span<const Link>(broken.data(), 1)));
}

TEST_CASE("path loss on fig1 equals the per-element table") {
  const auto t = fig1();
  const std::vector<std::vector<std::string>> walks = {
      {"NU-EPS", "NU-SW", "SL-SW", "FNAL-SW", "FNAL-Q1"},
      {"NU-EPS", "NU-SW", "ANL-SW", "ANL-Q1"},
      {"FNAL-EPS", "FNAL-SW", "FNAL-Q2"},
  };
  // fiber + connector losses by hand from the fixture, plus 1 dB per switch
  const std::vector<double> by_hand = {0.25 + 4 + 11 + 0.5 + 3 * 1.0, 0.25 + 9 + 0.5 + 2 * 1.0, 0.25 + 0.5 + 1.0};
  for (std::size_t i = 0; i < walks.size(); ++i) {
    std::vector<NodeId> nodes;
    for (const auto& s : walks[i]) nodes.emplace_back(s);
    const auto links = links_along(t, nodes);
    CHECK(path_loss_db(t, links) == doctest::Approx(oracle::element_loss(t, nodes)));
    CHECK(path_loss_db(t, links) == doctest::Approx(by_hand[i]));
  }
}

TEST_CASE("coexistence rule") {
  const auto t = load_topology(R"(
node A switch ports=4 il_db=1
node B switch ports=4 il_db=1
node C switch ports=4 il_db=1
link A B len_km=1 fiber_db=1 classical=C34
link B C len_km=1 fiber_db=1 classical=none
)");
  const auto& lit = t.link(NodeId("A"), NodeId("B"));
  const auto& dark = t.link(NodeId("B"), NodeId("C"));
  const auto o = parse_channel("O80");  // 228 THz
  const auto c32 = parse_channel("C32");
  CHECK(validate_coexistence(t, o, lit).ok);
  CHECK(o.center_freq_thz - parse_channel("C34").center_freq_thz > 20.0);
  const auto bad = validate_coexistence(t, c32, lit);
  CHECK_FALSE(bad.ok);
  REQUIRE(bad.violations.size() == 1);
  CHECK(validate_coexistence(t, c32, dark).ok);
  CHECK(validate_coexistence(t, o, dark).ok);
}

TEST_CASE("channel conversions") {
  CHECK(parse_channel("C32").wavelength_nm() == doctest::Approx(1551.72).epsilon(1e-5));
  CHECK(sync_channel().label == "C32");
  CHECK(parse_channel("O80").band == Band::O);
  CHECK_THROWS_AS(parse_channel("C999"), Error);
  CHECK(thz_to_wavelength_nm(wavelength_nm_to_thz(1310.0)) == doctest::Approx(1310.0));
}

// ---- properties

TEST_CASE("property: load . serialize . load is stable") {
  std::mt19937_64 g(7);
  for (int i = 0; i < 50; ++i) {
    const auto t1 = load_topology(i == 0 ? read_file(fixture("fig1.topo")) : oracle::random_rwa_instance(g));
    const auto t2 = load_topology(serialize_topology(t1));
    CHECK(t1.nodes() == t2.nodes());
    CHECK(t1.links() == t2.links());
    CHECK(serialize_topology(t2) == serialize_topology(t1));
  }
}

TEST_CASE("property: path loss is additive across a junction switch") {
  const auto t = fig1();
  const std::vector<NodeId> nodes{NodeId("NU-EPS"), NodeId("NU-SW"), NodeId("SL-SW"), NodeId("FNAL-SW"),
                                  NodeId("FNAL-Q1")};
  const auto links = links_along(t, nodes);
  const double whole = path_loss_db(t, links);
  for (std::size_t cut = 1; cut < links.size(); ++cut) {
    const std::span<const Link> all(links);
    const double junction = t.node(nodes[cut]).sw().insertion_loss_db;
    CHECK(whole == doctest::Approx(path_loss_db(t, all.first(cut)) + path_loss_db(t, all.subspan(cut)) + junction));
  }
}

TEST_CASE("property: adding classical channels never clears a violation") {
  const std::vector<std::string> pool = {"C20", "C34", "C50", "O25", "O40", "O87"};
  const std::vector<std::string> quantum = {"C21", "C40", "O80", "O30"};
  std::mt19937_64 g(3);
  for (int trial = 0; trial < 200; ++trial) {
    Link l;
    l.endpoint_a = NodeId("A");
    l.endpoint_b = NodeId("B");
    l.carries_classical = true;
    const auto q = parse_channel(quantum[g() % quantum.size()]);
    bool was_ok = true;
    for (int k = 0; k < 4; ++k) {
      l.classical_channels.push_back(parse_channel(pool[g() % pool.size()]));
      const bool ok = coexistence_on(q, l).ok;
      if (!was_ok) CHECK_FALSE(ok);
      was_ok = ok;
    }
  }
}

TEST_CASE("property: neighbor relation is symmetric") {
  std::mt19937_64 g(11);
  for (int i = 0; i < 50; ++i) {
    const auto t = load_topology(oracle::random_graph(g, 3 + static_cast<int>(g() % 6), 0.5));
    for (const auto& [a, na] : t.nodes())
      for (const auto& [b, link] : t.neighbors(a)) {
        bool back = false;
        for (const auto& [c, l2] : t.neighbors(b)) back = back || c == a;
        CHECK(back);
      }
  }
}
