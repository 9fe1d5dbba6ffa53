#include "qnet/photonics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qnet {

Transmittance transmittance_from_loss(double loss_db) {
  if (std::isnan(loss_db) || loss_db < 0.0) throw Error("negative loss: " + std::to_string(loss_db) + " dB");
  if (std::isinf(loss_db)) return {0.0};
  return {std::pow(10.0, -loss_db / 10.0)};
}

double loss_from_transmittance(Transmittance t) {
  if (t.eta <= 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(t.eta);
}

double expected_signal_clicks(double pair_rate_hz, Transmittance eta, const DetectorModel& detector,
                              double duration_s) {
  return pair_rate_hz * eta.eta * detector.efficiency * duration_s;
}

double expected_singles(double pair_rate_hz, Transmittance eta, const DetectorModel& detector, double duration_s) {
  return expected_signal_clicks(pair_rate_hz, eta, detector, duration_s) + detector.dark_rate_hz * duration_s;
}

double expected_coincidences(double pair_rate_hz, Transmittance eta_1, Transmittance eta_2,
                             const DetectorModel& det_1, const DetectorModel& det_2, double duration_s) {
  return pair_rate_hz * (eta_1.eta * det_1.efficiency) * (eta_2.eta * det_2.efficiency) * duration_s;
}

double expected_accidentals(double singles_1, double singles_2, double window_s, double duration_s) {
  if (duration_s <= 0.0) return 0.0;
  return singles_1 * singles_2 * window_s / duration_s;
}

CountSample sample_counts(const CountModel& model, RngStream& rng) {
  CountSample s;
  s.duration_s = model.duration_s;
  s.singles = rng.poisson(expected_signal_clicks(model.pair_rate_hz, model.eta, model.detector, model.duration_s));
  s.noise = rng.poisson((model.detector.dark_rate_hz + model.leakage_hz) * model.duration_s);
  return s;
}

CountSample sample_counts(const CountModel& model, std::uint64_t seed) {
  RngStream rng(seed, "counts");
  return sample_counts(model, rng);
}

std::string_view to_string(NoiseVerdict verdict) {
  switch (verdict) {
    case NoiseVerdict::Pass: return "pass";
    case NoiseVerdict::NoiseRatio: return "noise_ratio";
    case NoiseVerdict::NoSignal: return "no_signal";
  }
  return "?";
}

NoiseVerdict noise_ratio_check(std::uint64_t signal_counts, std::uint64_t noise_counts, double threshold) {
  if (signal_counts == 0) return NoiseVerdict::NoSignal;
  // noise/signal < threshold, kept in integers-times-double to avoid a division
  return static_cast<double>(noise_counts) < threshold * static_cast<double>(signal_counts)
             ? NoiseVerdict::Pass
             : NoiseVerdict::NoiseRatio;
}

namespace {

// Waiting time for `k` events of a Poisson process.
double gamma_arrival(RngStream& rng, int k, double rate) {
  if (rate <= 0.0) return std::numeric_limits<double>::infinity();
  double t = 0.0;
  for (int i = 0; i < k; ++i) t += rng.exponential(rate);
  return t;
}

}  // namespace

ScanResult scan_delay(std::int64_t true_offset, std::int64_t lo, std::int64_t hi, const DelayScanModel& model,
                      RngStream& rng) {
  ScanResult result;
  if (hi < lo) return result;

  const double batch = model.batch_counts;
  const double excess_needed = model.sigma_factor * std::sqrt(batch);
  const double expected_rate =
      model.expected_signal_rate_hz > 0.0 ? model.expected_signal_rate_hz : model.signal_rate_hz;
  double cap = model.max_dwell_s > 0.0 ? model.max_dwell_s
                                       : (expected_rate > 0.0 ? 2.5 * batch / expected_rate
                                                              : std::numeric_limits<double>::infinity());
  // beyond this dwell the baseline alone eats the required excess
  if (model.accidental_rate_hz > 0.0) cap = std::min(cap, (batch - excess_needed) / model.accidental_rate_hz);
  if (!(cap > 0.0) || std::isinf(cap)) return result;

  for (std::int64_t d = lo; d <= hi; ++d) {
    ++result.candidates_tried;
    const double rate = model.accidental_rate_hz + (d == true_offset ? model.signal_rate_hz : 0.0);
    bool confirmed = true;
    for (int round = 0; round < 2; ++round) {
      const double t = gamma_arrival(rng, model.batch_counts, rate);
      if (t > cap) {
        result.elapsed_s += cap;
        confirmed = false;
        break;
      }
      result.elapsed_s += t;
    }
    if (confirmed) {
      result.offset = d;
      return result;
    }
  }
  return result;
}

ScanResult scan_delay(std::int64_t true_offset, std::int64_t lo, std::int64_t hi, const DelayScanModel& model,
                      std::uint64_t seed) {
  RngStream rng(seed, "scan");
  return scan_delay(true_offset, lo, hi, model, rng);
}

}  // namespace qnet
