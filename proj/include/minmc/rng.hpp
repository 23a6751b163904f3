#pragma once
/**
 * @file rng.hpp
 * @brief Deterministic counter-based random number streams.
 *
 * A stream is identified by (seed, stream_id). The generator is a
 * SplitMix64-style counter construction: the i-th output is a bijective
 * 64-bit mix of key + i*gamma, where the key itself is derived from seed
 * and stream_id by the same mixing. Consequences:
 *   - identical (seed, stream_id) replays the identical sequence on any
 *     platform (no libc/compiler dependence in the integer path),
 *   - substreams can be derived by index, independent of scheduling,
 *   - no shared state; a stream is a small value type.
 */

#include <cstdint>
#include <utility>

namespace minmc {

class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Derives an independent stream keyed by (this stream, child index).
  RngStream substream(std::uint64_t child) const;

  std::uint64_t next_u64();

  /// Uniform draw in [0, 1), 53-bit resolution.
  double uniform01();
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller; consumes exactly two 64-bit words.
  double normal();

  /// Independent standard normal pair (one Box-Muller transform).
  std::pair<double, double> normal_pair();

  /// Jointly Gaussian pair with correlation rho: Z2 = rho*Z1 + sqrt(1-rho^2)*Zperp.
  /// Throws std::invalid_argument for |rho| > 1.
  std::pair<double, double> normal_pair_correlated(double rho);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace minmc
