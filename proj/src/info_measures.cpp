#include "rdp/info_measures.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "rdp/errors.hpp"

namespace rdp {

namespace {

void check_disjoint(const std::vector<const AxisNames*>& groups) {
  std::set<std::string> seen;
  for (const auto* g : groups) {
    if (g->empty()) throw_argument("information measure: empty axis group");
    for (const auto& n : *g) {
      if (!seen.insert(n).second) throw_argument("information measure: axis '" + n + "' appears in two groups");
    }
  }
}

AxisNames concat(const AxisNames& a, const AxisNames& b) {
  AxisNames out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// I(A;B) on a pmf whose axes are exactly A ∪ B; rows = A, columns = B.
double mi_from_table(const std::vector<double>& joint, std::size_t rows, std::size_t cols) {
  std::vector<double> pa(rows, 0.0), pb(cols, 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = joint[r * cols + c];
      pa[r] += v;
      pb[c] += v;
      total += v;
    }
  if (total <= 0.0) return 0.0;
  double mi = 0.0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = joint[r * cols + c];
      if (v > 0.0) mi += v * std::log2(v * total / (pa[r] * pb[c]));
    }
  return mi / total;
}

// Lays out p's mass as [c][a][b] blocks.
struct Table3 {
  std::size_t na = 1, nb = 1, nc = 1;
  std::vector<double> t;
};

Table3 tabulate(const FinitePmf& p, const AxisNames& a, const AxisNames& b, const AxisNames& c) {
  AxisNames all = concat(concat(a, b), c);
  const FinitePmf m = marginalize(p, all);
  Table3 out;
  std::vector<std::size_t> pos_a, pos_b, pos_c;
  for (const auto& n : a) pos_a.push_back(m.axis_position(n));
  for (const auto& n : b) pos_b.push_back(m.axis_position(n));
  for (const auto& n : c) pos_c.push_back(m.axis_position(n));
  for (auto k : pos_a) out.na *= m.axes()[k].size;
  for (auto k : pos_b) out.nb *= m.axes()[k].size;
  for (auto k : pos_c) out.nc *= m.axes()[k].size;
  out.t.assign(out.na * out.nb * out.nc, 0.0);
  IndexCounter counter(m.axes());
  auto flat = [&](const std::vector<std::size_t>& pos) {
    std::size_t v = 0;
    for (auto k : pos) v = v * m.axes()[k].size + counter.digits()[k];
    return v;
  };
  for (std::size_t i = 0; i < m.size(); ++i, counter.next()) {
    out.t[(flat(pos_c) * out.na + flat(pos_a)) * out.nb + flat(pos_b)] += m[i];
  }
  return out;
}

}  // namespace

double clip_information(double bits, const char* what) {
  if (bits >= 0.0) return bits;
  if (bits >= -kInfoClipTol) return 0.0;
  throw_numeric(std::string(what) + " evaluated to " + std::to_string(bits) + " bits (< -1e-9)");
}

double entropy(const FinitePmf& p) {
  double h = 0.0;
  for (double v : p.probs()) {
    if (v > 0.0) h -= v * std::log2(v);
  }
  return h;
}

double mutual_information(const FinitePmf& p, const AxisNames& a, const AxisNames& b) {
  check_disjoint({&a, &b});
  const Table3 t = tabulate(p, a, b, {});
  return clip_information(mi_from_table(t.t, t.na, t.nb), "mutual information");
}

double conditional_mutual_information(const FinitePmf& p, const AxisNames& a, const AxisNames& b,
                                      const AxisNames& c) {
  check_disjoint({&a, &b, &c});
  const Table3 t = tabulate(p, a, b, c);
  const std::size_t block = t.na * t.nb;
  double cmi = 0.0;
  for (std::size_t ic = 0; ic < t.nc; ++ic) {
    std::vector<double> slice(t.t.begin() + static_cast<std::ptrdiff_t>(ic * block),
                              t.t.begin() + static_cast<std::ptrdiff_t>((ic + 1) * block));
    double pc = 0.0;
    for (double v : slice) pc += v;
    if (pc > 0.0) cmi += pc * mi_from_table(slice, t.na, t.nb);
  }
  return clip_information(cmi, "conditional mutual information");
}

InfoReport chain_rule_report(const FinitePmf& p, const AxisNames& a, const AxisNames& b, const AxisNames& c) {
  InfoReport r;
  r.value = mutual_information(p, a, concat(b, c));
  const double iac = mutual_information(p, a, c);
  const double iab_c = conditional_mutual_information(p, a, b, c);
  r.decomposition = {{"I(A;C)", iac}, {"I(A;B|C)", iab_c}, {"residual", r.value - iac - iab_c}};
  return r;
}

double gaussian_cond_entropy(const Eigen::MatrixXd& cov, const std::vector<int>& target,
                             const std::vector<int>& given) {
  if (cov.rows() != cov.cols()) throw_argument("gaussian_cond_entropy: covariance must be square");
  const int dim = static_cast<int>(cov.rows());
  std::set<int> seen;
  for (int i : target) {
    if (i < 0 || i >= dim || !seen.insert(i).second) throw_argument("gaussian_cond_entropy: bad target index");
  }
  for (int i : given) {
    if (i < 0 || i >= dim || !seen.insert(i).second) throw_argument("gaussian_cond_entropy: bad given index");
  }
  if (target.empty()) throw_argument("gaussian_cond_entropy: empty target");

  const auto k = static_cast<Eigen::Index>(target.size());
  const auto g = static_cast<Eigen::Index>(given.size());
  Eigen::MatrixXd s11(k, k), s12(k, g), s22(g, g);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) s11(i, j) = cov(target[i], target[j]);
    for (Eigen::Index j = 0; j < g; ++j) s12(i, j) = cov(target[i], given[j]);
  }
  for (Eigen::Index i = 0; i < g; ++i)
    for (Eigen::Index j = 0; j < g; ++j) s22(i, j) = cov(given[i], given[j]);

  Eigen::MatrixXd schur = s11;
  if (g > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s22);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12) {
      throw_numeric("gaussian_cond_entropy: conditioning block is singular (eigenvalues in [" + std::to_string(lo) +
                    ", " + std::to_string(hi) + "], condition number guard 1e12)");
    }
    schur -= s12 * s22.ldlt().solve(s12.transpose());
  }
  const double det = schur.determinant();
  if (!(det > 0.0)) throw_numeric("gaussian_cond_entropy: conditional covariance is not positive definite");
  const double two_pi_e = 2.0 * std::numbers::pi * std::numbers::e;
  return 0.5 * (static_cast<double>(k) * std::log(two_pi_e) + std::log(det));
}

}  // namespace rdp
