#pragma once

// Entropy and (conditional) mutual information on finite pmfs, in bits, plus the
// Gaussian conditional differential entropy used by the closed-form checks.

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rdp/prob_core.hpp"

namespace rdp {

inline constexpr double kInfoClipTol = 1e-9;

struct InfoReport {
  double value = 0.0;  // bits
  std::vector<std::pair<std::string, double>> decomposition;
};

double entropy(const FinitePmf& p);

/// I(A;B); axes outside A ∪ B are marginalized out first.
double mutual_information(const FinitePmf& p, const AxisNames& a, const AxisNames& b);

/// I(A;B|C) computed as Σ_c P(c) I(A;B | C=c).
double conditional_mutual_information(const FinitePmf& p, const AxisNames& a, const AxisNames& b,
                                      const AxisNames& c);

/// Chain-rule diagnostic: I(A;B,C) alongside I(A;C) and I(A;B|C).
InfoReport chain_rule_report(const FinitePmf& p, const AxisNames& a, const AxisNames& b, const AxisNames& c);

/// h(target | given) in nats for a centered Gaussian vector with covariance `cov`.
/// Throws NumericError when the conditioning block has condition number above 1e12.
double gaussian_cond_entropy(const Eigen::MatrixXd& cov, const std::vector<int>& target,
                             const std::vector<int>& given);

inline constexpr double kLog2E = 1.4426950408889634074;

inline double nats_to_bits(double nats) { return nats * kLog2E; }

/// Values in [-kInfoClipTol, 0) become 0; more negative values throw NumericError.
double clip_information(double bits, const char* what);

}  // namespace rdp
