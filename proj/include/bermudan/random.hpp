#pragma once

#include <cstdint>
#include <limits>

namespace bermudan {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent child seed from (parent, index). Used everywhere a
/// sub-computation needs its own stream: per path, per tree, per tree node,
/// per exercise date.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  return mix64(mix64(parent + 0x9e3779b97f4a7c15ULL) ^ mix64(index * 0xd1b54a32d192ed03ULL + 1));
}

/// SplitMix64 stream keyed by a seed. Satisfies UniformRandomBitGenerator so
/// it plugs into <random> distributions. Cheap to construct, so one stream
/// per path (or per tree node) is the normal usage.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Stream(std::uint64_t seed) noexcept : state_(mix64(seed)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal by inversion of the CDF.
  double normal();

 private:
  std::uint64_t state_;
};

/// Inverse of the standard normal CDF on (0, 1).
double inverse_normal_cdf(double p);

}  // namespace bermudan
