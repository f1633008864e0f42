#pragma once

// Finite-blocklength simulation of the random-binning scheme behind the region:
// a codebook v^n(m, m', j) drawn i.i.d. from p_V, a likelihood encoder for (m, m'),
// a typicality decoder recovering m' from z^n, and a memoryless decoder channel.
// Small blocklengths also get exact (enumerated) output laws.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdp/prob_core.hpp"
#include "rdp/region_solver.hpp"
#include "rdp/rng.hpp"

namespace rdp::coding {

inline constexpr std::size_t kMaxCodebookSymbols = std::size_t{1} << 26;
inline constexpr std::size_t kMaxExactOutcomes = std::size_t{1} << 20;
inline constexpr std::size_t kMaxExactCodewords = std::size_t{1} << 14;
inline constexpr double kMaxSchemeOps = 1u << 30;

struct RatePlan {
  std::size_t n = 0;
  double epsilon = 0.0;
  double rate_m = 0.0;       // R + epsilon
  double rate_mprime = 0.0;  // R'
  double rate_j = 0.0;       // Rc
  std::size_t size_m = 1, size_mprime = 1, size_j = 1;
  double i_xv = 0.0, i_zv = 0.0, i_yv = 0.0;
  bool sum_rate_xv = false;  // rate_m + rate_mprime > I(X;V)
  bool sum_rate_yv = false;  // rate_m + rate_mprime + rate_j > I(Y;V)
  std::vector<std::string> warnings;

  std::size_t codewords() const { return size_m * size_mprime * size_j; }
};

/// floor(2^{n·rate}), at least 1.
std::size_t index_size(std::size_t n, double rate);

RatePlan plan_rates(const FeasiblePoint& point, std::size_t n, double epsilon, double rc);

/// Plan with explicit rates (soft-covering experiments); information terms left at 0.
RatePlan fixed_plan(std::size_t n, double rate_m, double rate_mprime, double rate_j);

struct Codebook {
  RatePlan plan;
  std::size_t alphabet = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint8_t> words;  // ((m·L' + m')·Lj + j)·n + t

  std::size_t n() const { return plan.n; }
  std::size_t index(std::size_t m, std::size_t mp, std::size_t j) const {
    return (m * plan.size_mprime + mp) * plan.size_j + j;
  }
  std::span<const std::uint8_t> word(std::size_t m, std::size_t mp, std::size_t j) const {
    return std::span<const std::uint8_t>(words).subspan(index(m, mp, j) * plan.n, plan.n);
  }
  std::span<const std::uint8_t> word(std::size_t flat) const {
    return std::span<const std::uint8_t>(words).subspan(flat * plan.n, plan.n);
  }
  /// Codewords with a fixed j, as a codebook with size_j = 1.
  Codebook sub_codebook(std::size_t j) const;
};

Codebook gen_codebook(const FinitePmf& pv, const RatePlan& plan, std::uint64_t seed);

void write_codebook(std::ostream& os, const Codebook& cb);
Codebook read_codebook(std::istream& is);

/// log p_{X|V}(x|v) table, rows v.
struct LikelihoodTable {
  std::size_t nv = 0, nx = 0;
  std::vector<double> logp;  // nv x nx, -inf where p = 0
  explicit LikelihoodTable(const Channel& x_given_v);
  double operator()(std::size_t v, std::size_t x) const { return logp[v * nx + x]; }
};

struct EncodeResult {
  std::size_t m = 0, mprime = 0;
  bool fallback = false;  // all-zero posterior; drew uniformly
};

/// One draw of (m, m') from the posterior ∝ Π_t p_{X|V}(x_t | v_t(m, m', j)).
EncodeResult encode(const Codebook& cb, std::span<const std::uint8_t> xn, std::size_t j, const LikelihoodTable& lik,
                    Rng& rng);

/// Exact posterior over (m, m') (row-major), for testing.
std::vector<double> encoder_posterior(const Codebook& cb, std::span<const std::uint8_t> xn, std::size_t j,
                                      const LikelihoodTable& lik);

struct DecodeResult {
  std::size_t mprime = 0;
  std::size_t typical = 0;  // number of jointly typical candidates
  bool flagged = false;     // typical != 1; the least atypical candidate was returned
};

/// Default robust-typicality slack 0.15·n^(-1/3).
double default_delta_typ(std::size_t n);

/// Robust typicality w.r.t. p_{V,Z} (axes V, Z): |π(v,z) - p(v,z)| ≤ δ·p(v,z) on every cell.
DecodeResult decode_mprime(const Codebook& cb, std::size_t m, std::size_t j, std::span<const std::uint8_t> zn,
                           const FinitePmf& pvz, double delta_typ);

/// y_t ~ dec(· | z_t, v_t) with dec a channel from (Z, V) to Y.
std::vector<std::uint8_t> decode_output(const Codebook& cb, std::size_t m, std::size_t mprime_hat, std::size_t j,
                                        std::span<const std::uint8_t> zn, const Channel& dec, Rng& rng);

/// (1/ℓ)·Σ_codewords Π_t emit(w_t | v_t) over W[0..n-1]. Split-half OpenMP kernel.
FinitePmf exact_output_marginal(const Codebook& cb, const Channel& emit);
/// Direct enumeration, serial; reference for the kernel above.
FinitePmf exact_output_marginal_naive(const Codebook& cb, const Channel& emit);

struct SweepCell {
  double rate = 0.0;
  std::size_t n = 0;
  std::size_t codewords = 0;
  std::size_t codebooks = 0;
  double mean_tv = 0.0;
  double std_err = 0.0;
  bool skipped = false;  // exactness guard
};

/// Mean exact TV between the codebook-induced output law and p_W^{⊗n}, over
/// `codebooks_per_cell` independent codebooks per (rate, n).
std::vector<SweepCell> soft_cover_sweep(const FinitePmf& pv, const Channel& emit, const std::vector<double>& rates,
                                        const std::vector<std::size_t>& ns, std::size_t codebooks_per_cell,
                                        std::uint64_t seed);

/// Same statistic for the sub-codebook at index j of a codebook with rates
/// (rate - rate_j) for m and rate_j for j.
std::vector<SweepCell> soft_cover_sweep_subcodebook(const FinitePmf& pv, const Channel& emit,
                                                    const std::vector<double>& rates, double rate_j, std::size_t j,
                                                    const std::vector<std::size_t>& ns,
                                                    std::size_t codebooks_per_cell, std::uint64_t seed);

/// K = coupling_to_channel(maximal_coupling(p_out, target)).
Channel perfect_realism_correct(const FinitePmf& p_out, const FinitePmf& target);

/// E d_n(X^n, Y'^n) for Y' ~ K(·|Y^n) under a joint over (X[0..n-1], Y[0..n-1]).
double corrected_distortion(const FinitePmf& joint_xy, const Channel& k, const SourceSpec& source, std::size_t n);

/// Block distortion (1/n)·Σ_t d(x_t, y_t) averaged under a joint over (X^n, Y^n).
double block_distortion(const FinitePmf& joint_xy, const SourceSpec& source, std::size_t n);

/// Exact law of (X^n, Y^n) under the full scheme with codebook `cb`: likelihood
/// encoder, typicality decoder, decoder channel. Guarded by kMaxSchemeOps.
FinitePmf exact_scheme_joint(const FeasiblePoint& point, const SourceSpec& source, const Codebook& cb,
                             double delta_typ);

struct SimOptions {
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  bool correct_realism = false;
  double delta_typ = 0.0;  // 0 selects default_delta_typ(n)
  bool exact_scheme = true;
};

struct SimReport {
  std::size_t n = 0;
  RatePlan plan;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::uint64_t codebook_seed = 0;
  double delta_typ = 0.0;
  double avg_distortion = 0.0;
  double distortion_se = 0.0;
  double mprime_error_rate = 0.0;
  double mprime_error_se = 0.0;
  std::size_t encode_fallbacks = 0;
  std::size_t decode_flagged = 0;
  /// TV(Y^n law induced by the codebook through p_{Y|V}, p_X^{⊗n}).
  std::optional<double> tv_exact;
  /// TV(exact scheme Y^n law, p_X^{⊗n}), when enumerable.
  std::optional<double> tv_exact_scheme;
  double tv_per_letter = 0.0;
  bool correction_applied = false;
  std::optional<double> corrected_avg_distortion;
  std::optional<double> corrected_tv_per_letter;
  std::vector<std::string> flags;
  double wall_seconds = 0.0;
};

SimReport simulate(const FeasiblePoint& point, const SourceSpec& source, const RatePlan& plan, const SimOptions& opts);

/// Lexicographic index of a sequence over an alphabet (t = 0 most significant).
std::size_t sequence_index(std::span<const std::uint8_t> seq, std::size_t alphabet);

}  // namespace rdp::coding
