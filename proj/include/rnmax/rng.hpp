#ifndef RNMAX_RNG_HPP
#define RNMAX_RNG_HPP

#include <array>
#include <cstdint>
#include <limits>

namespace rnmax {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Order-sensitive 64-bit hash accumulation.
std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v);

/// Bit pattern of a double, with -0.0 folded onto +0.0.
std::uint64_t double_bits(double x);

/// Reproducible random stream identified by (seed, stream_id).
///
/// xoshiro256** seeded through SplitMix64 from both identifiers. All variate
/// transforms are written out here rather than taken from <random>, whose
/// distributions are not specified bit-for-bit across standard libraries.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Unit-rate exponential.
  double exponential();
  /// Standard normal (Marsaglia polar method).
  double normal();
  /// Gamma(shape, 1) (Marsaglia-Tsang; boosted for shape < 1).
  double gamma(double shape);

 private:
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rnmax

#endif  // RNMAX_RNG_HPP
