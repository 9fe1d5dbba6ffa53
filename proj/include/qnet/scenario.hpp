#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qnet/messages.hpp"
#include "qnet/topology.hpp"

namespace qnet {

struct RequestEvent {
  EntanglementRequest request;
};
struct DriftEvent {
  LinkKey link;
  double delta_db = 0.0;
};
struct DownEvent {
  NodeId node;
};
/// Stray light at a Q-node's detectors (extension to the fault lines).
struct LeakEvent {
  NodeId node;
  double rate_hz = 0.0;
};

struct ScenarioEvent {
  SimTime at = 0;
  std::variant<RequestEvent, DriftEvent, DownEvent, LeakEvent> what;
  int line = 0;
};

struct Scenario {
  std::vector<ScenarioEvent> events;
};

class ScenarioError : public Error {
 public:
  ScenarioError(int line, const std::string& message)
      : Error("scenario line " + std::to_string(line) + ": " + message), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Grammar (times in seconds, `#` starts a comment):
///   at <t> request qubit=<pol|timebin> from=<qnode> to=<qnode> basis=<label>
///        start=<t1> end=<t2> [ebits=<n>]
///   at <t> drift <nodeA>/<nodeB> <+dB|-dB>
///   at <t> down <node>
///   at <t> leak <qnode> <rate_hz>
Scenario parse_scenario(std::string_view text);
Scenario load_scenario_file(const std::string& path);

/// Checks that every referenced node and link exists. Throws ScenarioError.
void validate_scenario(const Scenario& scenario, const Topology& topology);

/// `request <eps> <qnode1> <qnode2>` lines for rwa-solve.
struct RwaRequest {
  NodeId eps;
  NodeId qnode_1;
  NodeId qnode_2;
  int line = 0;
};
std::vector<RwaRequest> parse_rwa_requests(std::string_view text);

/// Assigns the requests in order against one shared ledger. One line per
/// request: `ASSIGNED <sig> <idl> loss1=<dB> loss2=<dB>` or `BLOCKED <cause>`.
std::vector<std::string> solve_rwa_requests(const Topology& topology, const std::vector<RwaRequest>& requests,
                                            std::size_t k_paths = 0);

}  // namespace qnet
