#include "rdp/gaussian_model.hpp"

#include <cmath>
#include <sstream>
#include <tuple>

#include "rdp/errors.hpp"
#include "rdp/rng.hpp"

namespace rdp::gaussian {

GaussianParams make_params(double eta, double delta) {
  if (!(eta >= 0.0 && eta < 1.0)) throw_argument("gaussian: eta must lie in [0, 1)");
  const double hi = 2.0 - 2.0 * eta;
  if (!(delta > 0.0 && delta <= hi)) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "gaussian: delta must lie in (0, " << hi << "] for eta = " << eta;
    throw_argument(msg.str());
  }
  GaussianParams p;
  p.eta = eta;
  p.delta = delta;
  p.rho = 1.0 - delta / 2.0;
  const double e2 = eta * eta, r2 = p.rho * p.rho;
  const double num = std::max(0.0, r2 - e2);
  p.b = std::sqrt(num / (1.0 + e2 * r2 - 2.0 * e2));
  return p;
}

double min_rate(const GaussianParams& p) {
  return 0.5 * std::log2((1.0 - p.eta * p.eta) / (1.0 - p.rho * p.rho));
}

std::pair<double, double> cond_mean_coeffs(double eta, double b) {
  const double den = 1.0 - eta * eta * b * b;
  if (std::abs(den) < 1e-15) throw_numeric("cond_mean_coeffs: eta·b = ±1 makes (Z, V) degenerate");
  return {eta * (1.0 - b * b) / den, b * (1.0 - eta * eta) / den};
}

namespace {

struct Draw {
  double z, x, v, y;
};

class Sampler {
 public:
  Sampler(const GaussianParams& p, std::uint64_t seed) : p_(p), rng_(seed) {
    std::tie(az_, av_) = cond_mean_coeffs(p.eta, p.b);
    sz_ = std::sqrt(1.0 - p.eta * p.eta);
    sv_ = std::sqrt(1.0 - p.b * p.b);
  }
  Draw next() {
    const double xt = rng_.normal();
    const double zt = rng_.normal();
    const double vt = rng_.normal();
    Draw d;
    d.x = xt;
    d.z = p_.eta * xt + sz_ * zt;
    d.v = p_.b * xt + sv_ * vt;
    // rho = 0 only at (eta, delta) = (0, 2), where E[X|Z,V] = 0: emit a fresh N(0,1)
    d.y = p_.rho > 0.0 ? (az_ * d.z + av_ * d.v) / p_.rho : rng_.normal();
    return d;
  }

 private:
  GaussianParams p_;
  Rng rng_;
  double az_ = 0, av_ = 0, sz_ = 0, sv_ = 0;
};

// Raw power sums; merged in shard order so the total is independent of threads.
struct Sums {
  double n = 0;
  double e1 = 0, e2 = 0;                  // (X-Y)²
  double c1 = 0, c2 = 0;                  // (rho Y)² = E[X|Z,V]²
  double y1 = 0, y2 = 0, y3 = 0, y4 = 0;  // Y
  double q1 = 0, q2 = 0;                  // X Z

  void add(const Draw& d, double rho) {
    const double e = (d.x - d.y) * (d.x - d.y);
    const double m = rho * d.y;
    const double c = m * m;
    const double y2v = d.y * d.y;
    const double q = d.x * d.z;
    n += 1;
    e1 += e;
    e2 += e * e;
    c1 += c;
    c2 += c * c;
    y1 += d.y;
    y2 += y2v;
    y3 += y2v * d.y;
    y4 += y2v * y2v;
    q1 += q;
    q2 += q * q;
  }
  void merge(const Sums& o) {
    n += o.n;
    e1 += o.e1;
    e2 += o.e2;
    c1 += o.c1;
    c2 += o.c2;
    y1 += o.y1;
    y2 += o.y2;
    y3 += o.y3;
    y4 += o.y4;
    q1 += o.q1;
    q2 += o.q2;
  }
};

Estimate mean_estimate(double s1, double s2, double n, double target) {
  Estimate e;
  e.mean = s1 / n;
  const double var = std::max(0.0, s2 / n - e.mean * e.mean) * n / (n - 1);
  e.std_err = std::sqrt(var / n);
  e.target = target;
  e.flagged = std::abs(e.mean - target) > kMcSigmas * e.std_err;
  return e;
}

McStats finalize(const GaussianParams& p, const Sums& s, std::size_t shards) {
  McStats st;
  st.n_samples = static_cast<std::size_t>(s.n);
  st.shards = shards;
  st.mean_sq_err = mean_estimate(s.e1, s.e2, s.n, p.delta);
  st.mean_sq_cond = mean_estimate(s.c1, s.c2, s.n, p.rho * p.rho);
  st.cov_xz = mean_estimate(s.q1, s.q2, s.n, p.eta);

  const double n = s.n;
  const double m = s.y1 / n;
  const double m2 = s.y2 / n, m3 = s.y3 / n, m4 = s.y4 / n;
  const double var = m2 - m * m;
  const double mu4 = m4 - 4 * m * m3 + 6 * m * m * m2 - 3 * m * m * m * m;
  Estimate v;
  v.mean = var * n / (n - 1);
  v.std_err = std::sqrt(std::max(0.0, mu4 - var * var) / n);
  v.target = 1.0;
  v.flagged = std::abs(v.mean - v.target) > kMcSigmas * v.std_err;
  st.var_y = v;
  return st;
}

void check_mc_args(std::size_t n_samples, std::size_t shards) {
  if (n_samples < 2) throw_argument("mc_validate: n_samples must be >= 2");
  if (shards == 0 || shards > n_samples) throw_argument("mc_validate: shards must be in [1, n_samples]");
}

Sums run_shard(const GaussianParams& p, std::size_t n_samples, std::uint64_t seed, std::size_t shards, std::size_t k) {
  const std::size_t lo = n_samples * k / shards, hi = n_samples * (k + 1) / shards;
  Sampler sampler(p, shards == 1 ? seed : derive_seed(seed, "shard", k));
  Sums s;
  for (std::size_t i = lo; i < hi; ++i) s.add(sampler.next(), p.rho);
  return s;
}

}  // namespace

std::vector<Sample> sample_construction(const GaussianParams& p, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw_argument("sample_construction: n_samples must be >= 1");
  Sampler sampler(p, seed);
  std::vector<Sample> out(n_samples);
  for (auto& s : out) {
    const Draw d = sampler.next();
    s = Sample{d.z, d.x, d.v, d.y};
  }
  return out;
}

McStats mc_validate_serial(const GaussianParams& p, std::size_t n_samples, std::uint64_t seed, std::size_t shards) {
  check_mc_args(n_samples, shards);
  Sums total;
  for (std::size_t k = 0; k < shards; ++k) total.merge(run_shard(p, n_samples, seed, shards, k));
  return finalize(p, total, shards);
}

McStats mc_validate(const GaussianParams& p, std::size_t n_samples, std::uint64_t seed, std::size_t shards) {
  check_mc_args(n_samples, shards);
  std::vector<Sums> parts(shards);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(shards); ++k) {
    parts[static_cast<std::size_t>(k)] = run_shard(p, n_samples, seed, shards, static_cast<std::size_t>(k));
  }
  Sums total;
  for (const auto& s : parts) total.merge(s);
  return finalize(p, total, shards);
}

double ui_bound(double tau, double sigma) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw_argument("ui_bound: tau must lie in [0, 1]");
  if (!(sigma > 0.0)) throw_argument("ui_bound: sigma must be > 0");
  return 2.0 * sigma * sigma + 2.0 * std::sqrt(3.0) * std::sqrt(tau) * sigma * sigma;
}

}  // namespace rdp::gaussian
