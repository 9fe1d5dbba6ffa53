#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "qnet/config.hpp"
#include "qnet/controller.hpp"
#include "qnet/kernel.hpp"
#include "qnet/scenario.hpp"
#include "qnet/world.hpp"

namespace qnet {

struct SessionSummary {
  SessionId id = 0;
  std::string state;  // Complete | Incomplete | Failed(cause) | Rejected(cause) | <phase> if unfinished
  std::uint64_t ebits = 0;
  int retries = 0;
  double duration_s = 0.0;
};

struct SimulationReport {
  std::vector<std::string> trace;
  std::vector<std::pair<std::string, std::string>> metrics;
  std::vector<SessionSummary> sessions;
  std::uint64_t sweep_violations = 0;
  std::string first_violation;

  std::string trace_text() const;
  std::string metrics_text() const;
  std::string sessions_text() const;
  const std::string* metric(const std::string& key) const;
};

/// One configured run: world, kernel and every agent, wired from a topology.
class Simulation {
 public:
  Simulation(const Topology& topology, const Scenario& scenario, SimConfig config);

  void run();
  SimulationReport report() const;

  Kernel& kernel() { return *kernel_; }
  World& world() { return *world_; }
  ControllerAgent& controller() { return *controller_; }
  std::vector<const SwitchAgent*> switch_agents() const;

 private:
  SimConfig config_;
  std::unique_ptr<World> world_;
  std::unique_ptr<Kernel> kernel_;
  ControllerAgent* controller_ = nullptr;
  std::vector<SwitchAgent*> switches_;
  std::uint64_t sweeps_ = 0;
  std::uint64_t sweep_violations_ = 0;
  std::string first_violation_;
};

SimulationReport run_simulation(const Topology& topology, const Scenario& scenario, const SimConfig& config);

/// Writes trace.log, metrics.txt and sessions.txt into `out_dir` (created if
/// needed).
void write_report(const SimulationReport& report, const std::filesystem::path& out_dir);

}  // namespace qnet
