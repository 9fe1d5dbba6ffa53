#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace qnet {

/// Counter-based random stream. Output i is a bijective mix of (key, i), so a
/// stream is fully described by its key and position; streams derived from
/// different names never share state. Samplers below are implemented here
/// rather than via <random> distributions so that sequences are identical
/// across standard libraries.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream() = default;
  explicit RngStream(std::uint64_t key) : key_(key) {}
  /// Stream for `name` under `master_seed`.
  RngStream(std::uint64_t master_seed, std::string_view name);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();
  /// Child stream; independent of this stream's position.
  RngStream substream(std::string_view name) const;

  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);  // inclusive
  bool bernoulli(double p) { return uniform() < p; }
  double normal(double mean = 0.0, double stddev = 1.0);
  double exponential(double rate);
  std::uint64_t poisson(double mean);

  std::uint64_t key() const { return key_; }
  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

std::uint64_t hash_name(std::string_view name);

}  // namespace qnet
