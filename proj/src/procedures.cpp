#include "qnet/procedures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace qnet {

ClassicalVerdict verify_path_classical(double injected_dbm, double measured_dbm, std::optional<double> predicted_loss_db,
                                       double tolerance_db) {
  ClassicalVerdict v;
  v.loss_db = injected_dbm - measured_dbm;
  if (measured_dbm > injected_dbm) {
    v.cause = "inconsistent_power";
    return v;
  }
  if (predicted_loss_db && std::fabs(v.loss_db - *predicted_loss_db) > tolerance_db) {
    v.cause = "loss_mismatch";
    return v;
  }
  v.ok = true;
  return v;
}

double measure_power_dbm(double injected_dbm, double true_loss_db, double noise_sigma_db, RngStream& rng) {
  const double noise = noise_sigma_db > 0.0 ? rng.normal(0.0, noise_sigma_db) : 0.0;
  // a meter cannot read more than was launched
  return std::min(injected_dbm, injected_dbm - true_loss_db + noise);
}

std::pair<double, double> click_band(double expected, const QuantumCheckConfig& config) {
  const double rel = std::log(10.0) / 10.0 * config.loss_estimate_sigma_db;
  const double sd = std::sqrt(expected + (expected * rel) * (expected * rel));
  return {expected - config.sigma_factor * sd, expected + config.sigma_factor * sd};
}

QuantumVerdict verify_path_quantum(const CountSample& sample, double expected_clicks, const QuantumCheckConfig& config) {
  QuantumVerdict v;
  v.expected = expected_clicks;
  std::tie(v.lo, v.hi) = click_band(expected_clicks, config);
  switch (noise_ratio_check(sample.singles, sample.noise, config.noise_threshold)) {
    case NoiseVerdict::NoSignal:
      v.cause = "no_signal";
      return v;
    case NoiseVerdict::NoiseRatio:
      v.cause = "noise_ratio";
      return v;
    case NoiseVerdict::Pass:
      break;
  }
  const double clicks = static_cast<double>(sample.singles);
  if (clicks < v.lo || clicks > v.hi) {
    v.cause = "click_count";
    return v;
  }
  v.ok = true;
  return v;
}

double malus_power(double setting_deg, double true_deg, double input_power) {
  const double c = std::cos((setting_deg - true_deg) * std::numbers::pi / 180.0);
  return input_power * c * c;
}

double interference_power(double setting_rad, double true_rad, double input_power) {
  const double c = std::cos((setting_rad - true_rad) / 2.0);
  return input_power * c * c;
}

namespace {

double circular_distance(double a, double b, double period) {
  double d = std::fmod(std::fabs(a - b), period);
  return std::min(d, period - d);
}

template <typename PowerFn>
AlignmentResult grid_align(double current, double truth, double period, const AlignmentConfig& config, PowerFn power) {
  AlignmentResult r;
  r.setting = current;
  if (config.max_iterations < 1) {
    r.cause = "no_convergence";
    return r;
  }
  r.iterations = 1;
  if (circular_distance(current, truth, period) <= config.tolerance) {
    r.ok = true;
    return r;
  }
  const int steps = static_cast<int>(std::llround(period / config.grid_step));
  double best = -1.0;
  double best_setting = current;
  for (int i = 0; i < steps; ++i) {
    if (r.iterations >= config.max_iterations) {
      r.cause = "no_convergence";
      return r;
    }
    ++r.iterations;
    const double s = i * config.grid_step;
    const double p = power(s, truth);
    if (p > best) {
      best = p;
      best_setting = s;
    }
  }
  r.setting = best_setting;
  if (circular_distance(best_setting, truth, period) > config.tolerance) {
    r.cause = "no_convergence";
    return r;
  }
  r.ok = true;
  return r;
}

}  // namespace

AlignmentResult calibrate_polarization(double current_deg, double true_deg, const AlignmentConfig& config) {
  return grid_align(current_deg, true_deg, 180.0, config, [](double s, double t) { return malus_power(s, t); });
}

AlignmentResult calibrate_phase(double current_rad, double true_rad, const AlignmentConfig& config) {
  return grid_align(current_rad, true_rad, 2.0 * std::numbers::pi, config,
                    [](double s, double t) { return interference_power(s, t); });
}

BinsResult identify_bins(double early_true_s, double separation_s, const DetectorModel& detector, double photons,
                         RngStream& rng) {
  BinsResult r;
  const double width = detector.time_bin_width_s;
  if (!(separation_s >= width)) {
    r.cause = "histogram_ambiguous";
    return r;
  }
  const auto peak = [&](double arrival_s) {
    const std::int64_t center = static_cast<std::int64_t>(std::floor(arrival_s / width));
    std::map<std::int64_t, std::uint64_t> hist;
    hist[center] += rng.poisson(photons);
    // dark counts spread over a window around the pulse
    constexpr std::int64_t kHalfWindow = 32;
    const std::uint64_t dark = rng.poisson(detector.dark_rate_hz * width * (2 * kHalfWindow + 1) * photons);
    for (std::uint64_t i = 0; i < dark; ++i) hist[center + rng.uniform_int(-kHalfWindow, kHalfWindow)] += 1;
    auto best = hist.begin();
    for (auto it = hist.begin(); it != hist.end(); ++it)
      if (it->second > best->second) best = it;
    return best->first;
  };
  r.early = peak(early_true_s);
  r.late = peak(early_true_s + separation_s);
  if (r.late <= r.early) {
    r.cause = "histogram_ambiguous";
    return r;
  }
  r.ok = true;
  return r;
}

SyncResult bit_level_sync(std::int64_t true_offset, const RangeBody& range, const DelayScanModel& model,
                          RngStream& rng) {
  const ScanResult scan = scan_delay(true_offset, range.lo, range.hi, model, rng);
  SyncResult r;
  r.elapsed_s = scan.elapsed_s;
  if (scan.offset) {
    r.ok = true;
    r.offset = *scan.offset;
  }
  return r;
}

EntangleRun::EntangleRun(std::uint64_t target, SimTime end_time, double tick_s)
    : target_(target), end_time_(end_time), tick_s_(tick_s) {}

std::optional<SimTime> EntangleRun::advance(SimTime from, SimTime to, double rate_hz, RngStream& rng) {
  if (done()) return from;
  if (to <= from || !(rate_hz > 0.0)) return std::nullopt;
  const std::uint64_t n = rng.poisson(rate_hz * ns_to_seconds(to - from));
  std::vector<SimTime> times(n);
  for (auto& t : times) t = from + static_cast<SimTime>(rng.uniform() * static_cast<double>(to - from));
  std::sort(times.begin(), times.end());
  for (SimTime t : times) {
    const int bit = static_cast<int>(rng() >> 63);
    log_.push_back(EBit{static_cast<std::int64_t>(std::floor(ns_to_seconds(t) / tick_s_)), bit, bit});
    if (done()) return t;
  }
  return std::nullopt;
}

EntangleOutcome run_entangle_phase(std::uint64_t target, SimTime start, SimTime end_time, double rate_hz,
                                   RngStream& rng, double tick_s) {
  EntangleRun run(target, end_time, tick_s);
  EntangleOutcome out;
  out.finished_at = end_time;
  if (target == 0) {
    out.complete = true;
    out.finished_at = start;
    return out;
  }
  if (auto reached = run.advance(start, end_time, rate_hz, rng)) {
    out.finished_at = *reached;
    out.complete = true;
  }
  out.log = run.log();
  return out;
}

}  // namespace qnet
