#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "qnet/rng.hpp"
#include "qnet/topology.hpp"

namespace qnet {

struct Transmittance {
  double eta = 1.0;  // [0, 1]
};

/// eta = 10^(-loss_db/10). Throws qnet::Error for negative or NaN loss.
/// +inf loss gives eta = 0.
Transmittance transmittance_from_loss(double loss_db);
double loss_from_transmittance(Transmittance t);

/// R * eta * efficiency * T + dark * T.
double expected_singles(double pair_rate_hz, Transmittance eta, const DetectorModel& detector, double duration_s);
/// Signal part only, R * eta * efficiency * T.
double expected_signal_clicks(double pair_rate_hz, Transmittance eta, const DetectorModel& detector,
                              double duration_s);
/// R * (eta_1 * eff_1) * (eta_2 * eff_2) * T.
double expected_coincidences(double pair_rate_hz, Transmittance eta_1, Transmittance eta_2,
                             const DetectorModel& det_1, const DetectorModel& det_2, double duration_s);
/// singles_1 * singles_2 * window / T.
double expected_accidentals(double singles_1, double singles_2, double window_s, double duration_s);

struct CountModel {
  double pair_rate_hz = 0.0;
  Transmittance eta;
  DetectorModel detector;
  double leakage_hz = 0.0;  // stray light reaching the detector with the source off
  double duration_s = 1.0;
};

struct CountSample {
  double duration_s = 0.0;
  std::uint64_t singles = 0;  // source-on clicks from pairs
  std::uint64_t noise = 0;    // source-off clicks (dark + leakage)

  bool operator==(const CountSample&) const = default;
};

CountSample sample_counts(const CountModel& model, RngStream& rng);
CountSample sample_counts(const CountModel& model, std::uint64_t seed);

enum class NoiseVerdict { Pass, NoiseRatio, NoSignal };
std::string_view to_string(NoiseVerdict verdict);

/// Pass iff noise / signal < threshold (strict). Zero signal is NoSignal.
NoiseVerdict noise_ratio_check(std::uint64_t signal_counts, std::uint64_t noise_counts, double threshold);

struct DelayScanModel {
  double signal_rate_hz = 0.0;      // true coincidences at the correct delay
  double accidental_rate_hz = 0.0;  // coincidences at any delay
  int batch_counts = 10;
  double sigma_factor = 3.0;
  /// Longest dwell per candidate; <= 0 selects 2.5 * batch / expected rate.
  double max_dwell_s = 0.0;
  /// Rate the scanner expects at the correct delay (it does not know the
  /// truth); <= 0 means use signal_rate_hz.
  double expected_signal_rate_hz = 0.0;
};

struct ScanResult {
  std::optional<std::int64_t> offset;
  double elapsed_s = 0.0;
  int candidates_tried = 0;
};

/// Walks candidates lo..hi in ascending order. At each one it waits for
/// `batch_counts` coincidences; the candidate is likely when they arrive
/// before the accidental baseline could plausibly produce them (excess over
/// baseline > sigma_factor * sqrt(batch)). A likely candidate is confirmed by
/// a second batch. Arrival times are drawn as Gamma(batch, rate).
ScanResult scan_delay(std::int64_t true_offset, std::int64_t lo, std::int64_t hi, const DelayScanModel& model,
                      RngStream& rng);
ScanResult scan_delay(std::int64_t true_offset, std::int64_t lo, std::int64_t hi, const DelayScanModel& model,
                      std::uint64_t seed);

}  // namespace qnet
