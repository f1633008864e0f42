#pragma once

// Scalar Gaussian source with Gaussian side information under squared error and
// perfect realism: closed-form rate, the explicit optimal construction, and Monte
// Carlo checks of its moments.

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace rdp::gaussian {

struct GaussianParams {
  double eta = 0.0;    // correlation of (X, Z)
  double delta = 0.0;  // distortion target
  double rho = 0.0;    // 1 - delta/2
  double b = 0.0;      // correlation of (X, V)
};

/// Requires 0 ≤ eta < 1 and 0 < delta ≤ 2 - 2·eta.
GaussianParams make_params(double eta, double delta);

/// ½·log2((1-eta²)/(1-rho²)) bits.
double min_rate(const GaussianParams& p);

/// (alphaZ, alphaV) with E[X|Z,V] = alphaZ·Z + alphaV·V.
std::pair<double, double> cond_mean_coeffs(double eta, double b);

struct Sample {
  double z, x, v, y;
};

/// n_samples draws of (Z, X, V, Y), three fresh standard normals per draw.
std::vector<Sample> sample_construction(const GaussianParams& p, std::size_t n_samples, std::uint64_t seed);

struct Estimate {
  double mean = 0.0;
  double std_err = 0.0;
  double target = 0.0;
  bool flagged = false;  // more than kMcSigmas standard errors from target
};

inline constexpr double kMcSigmas = 5.0;

struct McStats {
  std::size_t n_samples = 0;
  std::size_t shards = 1;
  Estimate mean_sq_err;   // E[(X-Y)²] vs delta
  Estimate var_y;         // Var(Y) vs 1
  Estimate mean_sq_cond;  // E[E[X|Z,V]²] vs rho²
  Estimate cov_xz;        // E[XZ] vs eta
};

/// Serial reference: one stream seeded from `seed`.
McStats mc_validate_serial(const GaussianParams& p, std::size_t n_samples, std::uint64_t seed, std::size_t shards = 1);

/// OpenMP version. Shard k draws from derive_seed(seed, "shard", k); the result
/// depends on (seed, shards) only, never on the thread count.
McStats mc_validate(const GaussianParams& p, std::size_t n_samples, std::uint64_t seed, std::size_t shards = 16);

/// 2σ² + 2√3·√tau·σ².
double ui_bound(double tau, double sigma);

}  // namespace rdp::gaussian
