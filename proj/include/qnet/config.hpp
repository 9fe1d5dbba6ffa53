#pragma once

#include <cstdint>
#include <optional>

#include "qnet/session.hpp"
#include "qnet/topology.hpp"

namespace qnet {

struct SimConfig {
  std::uint64_t master_seed = 0;
  double classical_latency_s_per_km = 5e-6;
  double end_time_s = 3600.0;

  SessionConfig session;
  double timeout_s = 5.0;
  double noise_threshold = 1.0 / 6.0;
  double power_noise_sigma_db = 0.2;
  double injected_power_dbm = 0.0;
  double duty_cycle_s = 10.0;
  double monitor_interval_s = 1.0;
  double degradation_threshold_db = 3.0;
  std::int64_t delay_half_range = 32;
  double fiber_speed_m_per_s = 2e8;
  double retry_backoff_s = 1.0;
  double alignment_step_s = 1e-3;
  double bins_photons = 100.0;
  std::size_t k_paths = 0;
  /// Node the controller is co-located with; defaults to the first switch.
  std::optional<NodeId> controller_site;

  /// Throws qnet::Error on out-of-range values.
  void validate() const;
};

}  // namespace qnet
