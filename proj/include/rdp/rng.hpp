#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace rdp {

/// Derives a child seed from a master seed and a purpose label.
/// All randomness in the library flows through this function so that a run
/// is fully determined by its master seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose);
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose, std::uint64_t index);

/// 64-bit Mersenne twister with portable uniform and normal transforms.
/// std::uniform_real_distribution / std::normal_distribution are avoided because
/// their output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via the Marsaglia polar method.
  double normal();

  /// Inverse-CDF draw from a probability vector (need not be exactly normalized).
  std::size_t categorical(std::span<const double> probs);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Name of the normal transform, recorded in reports.
inline constexpr std::string_view kNormalTransform = "marsaglia-polar/mt19937_64";

}  // namespace rdp
