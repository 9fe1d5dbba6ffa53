#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qnet/messages.hpp"
#include "qnet/photonics.hpp"
#include "qnet/rng.hpp"

namespace qnet {

// Classical stage of path verification.

struct ClassicalVerdict {
  bool ok = false;
  double loss_db = 0.0;
  std::string cause;  // inconsistent_power | loss_mismatch
};

/// loss = injected - measured. A measurement above the injected power is
/// impossible on a passive path and fails with inconsistent_power. When
/// `predicted_loss_db` is given the estimate must lie within `tolerance_db`.
ClassicalVerdict verify_path_classical(double injected_dbm, double measured_dbm,
                                       std::optional<double> predicted_loss_db = std::nullopt,
                                       double tolerance_db = 1.0);

/// Received power through `true_loss_db` with Gaussian meter noise.
double measure_power_dbm(double injected_dbm, double true_loss_db, double noise_sigma_db, RngStream& rng);

// Quantum stage.

struct QuantumCheckConfig {
  double noise_threshold = 1.0 / 6.0;
  double sigma_factor = 3.0;
  /// Standard deviation of the classical loss estimate the expectation is
  /// built from. Widens the acceptance band by the induced relative error.
  double loss_estimate_sigma_db = 0.2;
};

struct QuantumVerdict {
  bool ok = false;
  std::string cause;  // no_signal | noise_ratio | click_count
  double expected = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Acceptance band around an expected click count.
std::pair<double, double> click_band(double expected, const QuantumCheckConfig& config);

QuantumVerdict verify_path_quantum(const CountSample& sample, double expected_clicks,
                                   const QuantumCheckConfig& config);

// Basis alignment.

struct AlignmentResult {
  bool ok = false;
  std::string cause;  // no_convergence | histogram_ambiguous | no_light
  double setting = 0.0;
  int iterations = 0;
};

struct AlignmentConfig {
  int max_iterations = 1000;
  double grid_step = 1.0;  // degrees for polarization, radians for phase
  double tolerance = 1.0;
};

/// Malus-law transmitted power of alignment light through an analyzer at
/// `setting_deg` when the incoming polarization sits at `true_deg`.
double malus_power(double setting_deg, double true_deg, double input_power = 1.0);

/// Starts at `current_deg`; the check of the current setting is iteration 1.
/// When it is off by more than the tolerance, scans the grid over [0, 180)
/// and keeps the argmax.
AlignmentResult calibrate_polarization(double current_deg, double true_deg, const AlignmentConfig& config);

/// Two-path interference output cos^2(delta/2).
double interference_power(double setting_rad, double true_rad, double input_power = 1.0);

/// Interferometer phase search over [0, 2pi).
AlignmentResult calibrate_phase(double current_rad, double true_rad, const AlignmentConfig& config);

struct BinsResult {
  bool ok = false;
  std::string cause;
  std::int64_t early = 0;
  std::int64_t late = 0;
};

/// Builds early and late arrival histograms (in clock ticks) and reads off
/// each peak. Fails with histogram_ambiguous when the bins sit closer than
/// one clock width.
BinsResult identify_bins(double early_true_s, double separation_s, const DetectorModel& detector, double photons,
                         RngStream& rng);

// Bit-level sync.

struct SyncResult {
  bool ok = false;
  std::int64_t offset = 0;
  double elapsed_s = 0.0;
};

SyncResult bit_level_sync(std::int64_t true_offset, const RangeBody& range, const DelayScanModel& model,
                          RngStream& rng);

// Entangle phase.

/// Incremental e-bit generation at a fixed coincidence rate. The run keeps
/// the log across pauses for recalibration.
class EntangleRun {
 public:
  EntangleRun() = default;
  EntangleRun(std::uint64_t target, SimTime end_time, double tick_s);

  /// Generates coincidences over [from, to) at `rate_hz`; returns the time
  /// the target was reached, if it was.
  std::optional<SimTime> advance(SimTime from, SimTime to, double rate_hz, RngStream& rng);

  const std::vector<EBit>& log() const { return log_; }
  std::uint64_t target() const { return target_; }
  SimTime end_time() const { return end_time_; }
  bool done() const { return log_.size() >= target_; }

 private:
  std::uint64_t target_ = 0;
  SimTime end_time_ = 0;
  double tick_s_ = 1e-9;
  std::vector<EBit> log_;
};

struct EntangleOutcome {
  std::vector<EBit> log;
  SimTime finished_at = 0;
  bool complete = false;
};

/// Whole-phase convenience over EntangleRun without pauses.
EntangleOutcome run_entangle_phase(std::uint64_t target, SimTime start, SimTime end_time, double rate_hz,
                                   RngStream& rng, double tick_s = 1e-9);

}  // namespace qnet
