#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "qnet/kernel.hpp"
#include "qnet/scenario.hpp"
#include "qnet/simulation.hpp"
#include "qnet/topology.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitParse = 2;
constexpr int kExitRuntime = 3;

const char* kGrammar = R"(File formats (UTF-8, one declaration per line, '#' starts a comment):

Topology
  node <id> qnode  ip=<a.b.c.d> channels=<k> encodings=<pol,timebin> [eff=<0..1>]
                   [dark_hz=<x>] [clock_s=<x>] [site=<name>]
  node <id> eps    rate=<pairs_per_s> n=<N> band=<O|C> grid=<ch1,...,chN>
                   [encodings=pol,timebin] [site=<name>]
  node <id> switch ports=<M> il_db=<x> [site=<name>]
  link <idA> <idB> len_km=<x> fiber_db=<x> [il_db=<x>] [pdl_db=<x>]
                   [classical=<none|ch1,ch2,...>] [fibers=<n>]
  Channel labels: C<nn> (190.0+0.1*nn THz), O<nn> (220.0+0.1*nn THz), <f>THz.
  N must be even, grid index i pairs with N+1-i, links to an EPS carry N
  fibers, and a switch needs more ports than the N of any attached EPS.
  Unknown keys are errors.

Requests (rwa-solve)
  request <eps> <qnode1> <qnode2>
  Output per line: ASSIGNED <sig_ch> <idl_ch> loss1=<dB> loss2=<dB>
                or BLOCKED <no_path|no_channel|coexistence>

Scenario (run); times in seconds
  at <t> request qubit=<pol|timebin> from=<qnode> to=<qnode> basis=<label>
         start=<t1> end=<t2> [ebits=<n>]
  at <t> drift <nodeA>/<nodeB> <+dB|-dB>
  at <t> down <node>
  at <t> leak <qnode> <rate_hz>
  Bases: pol = HV | DA, timebin = Z | X.

Exit codes: 0 ok, 1 usage, 2 parse or validation error, 3 runtime or config error.
)";

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qnet::Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int validate_topology(const std::string& path) {
  const auto topo = qnet::load_topology_file(path);
  std::printf("OK: %zu sites, %zu nodes, %zu links\n", topo.site_count(), topo.nodes().size(), topo.links().size());
  return 0;
}

int rwa_solve(const std::string& topo_path, const std::string& req_path, std::size_t k_paths) {
  const auto topo = qnet::load_topology_file(topo_path);
  for (const auto& line : qnet::solve_rwa_requests(topo, qnet::parse_rwa_requests(slurp(req_path)), k_paths))
    std::cout << line << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qnet: entanglement-distribution network simulator"};
  app.require_subcommand(1);
  app.footer(kGrammar);

  std::string topo_path, req_path, scn_path, out_dir = "out";
  std::size_t k_paths = 0;
  qnet::SimConfig cfg;

  auto* validate = app.add_subcommand("validate-topology", "Load and check a topology file");
  validate->add_option("topology", topo_path, "Topology file")->required();

  auto* rwa = app.add_subcommand("rwa-solve", "Assign paths and conjugate channels for a request list");
  rwa->add_option("topology", topo_path, "Topology file")->required();
  rwa->add_option("requests", req_path, "Request list")->required();
  rwa->add_option("--k-paths", k_paths, "Candidate routes per arm, 0 = all");

  auto* run = app.add_subcommand("run", "Run a scenario and write trace.log, metrics.txt, sessions.txt");
  run->add_option("topology", topo_path, "Topology file")->required();
  run->add_option("scenario", scn_path, "Scenario file")->required();
  run->add_option("--seed", cfg.master_seed, "Master seed")->capture_default_str();
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--max-retries", cfg.session.max_retries, "Re-route limit per session")->capture_default_str();
  run->add_option("--timeout-s", cfg.timeout_s, "Entity timeout, simulated seconds")->capture_default_str();
  run->add_option("--noise-threshold", cfg.noise_threshold, "Noise/signal gate")->capture_default_str();
  run->add_option("--end-time", cfg.end_time_s, "Simulation horizon, seconds")->capture_default_str();
  run->add_option("--k-paths", cfg.k_paths, "Candidate routes per arm, 0 = all");

  app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*validate) return validate_topology(topo_path);
    if (*rwa) return rwa_solve(topo_path, req_path, k_paths);
    if (*run) {
      const auto topo = qnet::load_topology_file(topo_path);
      const auto scn = qnet::load_scenario_file(scn_path);
      qnet::Simulation sim(topo, scn, cfg);
      sim.run();
      const auto rep = sim.report();
      qnet::write_report(rep, out_dir);
      std::cout << rep.sessions_text();
      for (const char* key : {"events", "messages_sent", "blocking_ratio", "ebits_total"})
        if (const auto* v = rep.metric(key)) std::cout << key << "=" << *v << "\n";
      return 0;
    }
    std::cout << "qnet " << QNET_VERSION << "\n";
    return 0;
  } catch (const qnet::TopologyParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const qnet::TopologyValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const qnet::ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const qnet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
