#include "minmc/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace minmc {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

// 64-bit finalizer (Stafford variant 13 of the MurmurHash3 mixer).
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream_id) {
  // Two rounds so that low-entropy (seed, stream_id) pairs decorrelate.
  std::uint64_t k = mix64(seed + kGamma);
  k = mix64(k ^ mix64(stream_id + 0xD1B54A32D192ED03ULL));
  return k;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed),
      stream_id_(stream_id),
      key_(derive_key(seed, stream_id)),
      counter_(0) {}

RngStream RngStream::substream(std::uint64_t child) const {
  // Children live in a flat (seed, derived stream_id) namespace.
  return RngStream(seed_, mix64(stream_id_ * kGamma + 0x2545F4914F6CDD1DULL) ^
                              mix64(child + kGamma));
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t z = key_ + (++counter_) * kGamma;
  return mix64(z);
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

double RngStream::normal() { return normal_pair().first; }

std::pair<double, double> RngStream::normal_pair() {
  // u1 in (0,1] keeps the log finite; u2 in [0,1).
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

std::pair<double, double> RngStream::normal_pair_correlated(double rho) {
  if (!(rho >= -1.0 && rho <= 1.0)) {
    throw std::invalid_argument("normal_pair_correlated: |rho| must be <= 1");
  }
  const auto [z1, zp] = normal_pair();
  return {z1, rho * z1 + std::sqrt(1.0 - rho * rho) * zp};
}

}  // namespace minmc
