#include "rdp/region_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <omp.h>

#include "rdp/errors.hpp"
#include "rdp/info_measures.hpp"
#include "rdp/rng.hpp"
#include "rdp/transport.hpp"

namespace rdp {

// ---------------------------------------------------------------- SourceSpec

SourceSpec::SourceSpec(FinitePmf pxz, std::vector<std::vector<double>> distortion) : pxz_(std::move(pxz)) {
  if (pxz_.axes().size() != 2 || pxz_.axes()[0].name != "X" || pxz_.axes()[1].name != "Z") {
    throw_argument("SourceSpec: pxz must have axes (X, Z) in that order");
  }
  const std::size_t nx = x_size();
  if (distortion.size() != nx) throw_argument("SourceSpec: distortion must be |X| x |X|");
  for (const auto& row : distortion) {
    if (row.size() != nx) throw_argument("SourceSpec: distortion must be |X| x |X|");
    for (double v : row) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw_argument("SourceSpec: distortion entries must be finite and >= 0");
      dist_.push_back(v);
    }
  }
}

double SourceSpec::d_max() const { return *std::max_element(dist_.begin(), dist_.end()); }

std::vector<std::vector<double>> SourceSpec::distortion_rows() const {
  std::vector<std::vector<double>> rows(x_size(), std::vector<double>(x_size()));
  for (std::size_t x = 0; x < x_size(); ++x)
    for (std::size_t y = 0; y < x_size(); ++y) rows[x][y] = d(x, y);
  return rows;
}

FinitePmf SourceSpec::px() const { return marginalize(pxz_, {"X"}); }

std::vector<std::vector<double>> SourceSpec::hamming(std::size_t size) {
  std::vector<std::vector<double>> d(size, std::vector<double>(size, 1.0));
  for (std::size_t i = 0; i < size; ++i) d[i][i] = 0.0;
  return d;
}

SourceSpec SourceSpec::dsbs(double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw_argument("dsbs: crossover must lie in [0,1]");
  FinitePmf pxz({{"X", 2}, {"Z", 2}}, {0.5 * (1 - q), 0.5 * q, 0.5 * q, 0.5 * (1 - q)});
  return SourceSpec(std::move(pxz), hamming(2));
}

SourceSpec SourceSpec::independent(const std::vector<double>& px, const std::vector<double>& pz) {
  FinitePmf a({{"X", px.size()}}, px);
  FinitePmf b({{"Z", pz.size()}}, pz);
  return SourceSpec(product(a, b), hamming(px.size()));
}

double independent_distortion(const SourceSpec& source) {
  const FinitePmf px = source.px();
  double d = 0.0;
  for (std::size_t x = 0; x < source.x_size(); ++x)
    for (std::size_t y = 0; y < source.x_size(); ++y) d += px[x] * px[y] * source.d(x, y);
  return d;
}

std::size_t default_v_size(const SourceSpec& source) { return source.x_size() * source.z_size() + 2; }

// ---------------------------------------------------------------- assemble / evaluate

FeasiblePoint assemble(const SourceSpec& source, const Channel& enc, const Channel& dec) {
  if (enc.outputs().size() != 1 || enc.outputs()[0].name != "V") throw_argument("assemble: encoder must output V");
  for (const auto& a : enc.inputs()) {
    if (a.name != "X" && a.name != "Z") throw_argument("assemble: encoder inputs must be X or (X, Z)");
  }
  if (enc.inputs().empty() || enc.inputs()[0].name != "X") throw_argument("assemble: encoder must observe X");
  const std::size_t v = enc.outputs()[0].size;
  if (v == 0) throw_argument("assemble: v_size must be >= 1");
  if (dec.inputs() != AxisList{{"Z", source.z_size()}, {"V", v}}) {
    throw_argument("assemble: decoder inputs must be (Z, V) with matching sizes");
  }
  if (dec.outputs() != AxisList{{"Y", source.x_size()}}) {
    throw_argument("assemble: decoder must output Y over the source alphabet");
  }
  FinitePmf joint = compose(compose(source.pxz(), enc), dec);
  return FeasiblePoint{enc, dec, v, std::move(joint)};
}

RegionPoint evaluate(const FeasiblePoint& point, const SourceSpec& source) {
  const FinitePmf& j = point.joint;
  RegionPoint r;
  r.rate = conditional_mutual_information(j, {"X"}, {"V"}, {"Z"});
  r.rc_sum = mutual_information(j, {"Y"}, {"V"}) - mutual_information(j, {"Z"}, {"V"});
  const auto pos_x = j.axis_position("X");
  const auto pos_y = j.axis_position("Y");
  IndexCounter counter(j.axes());
  double dist = 0.0;
  for (std::size_t i = 0; i < j.size(); ++i, counter.next()) {
    dist += j[i] * source.d(counter.digits()[pos_x], counter.digits()[pos_y]);
  }
  r.distortion = dist;
  r.realism_gap = total_variation(marginalize(j, {"Y"}).renamed({"X"}), marginalize(j, {"X"}));
  return r;
}

MarkovGaps markov_check(const FinitePmf& joint) {
  const FinitePmf j = marginalize(joint, {"X", "Z", "V", "Y"});
  const std::size_t nx = j.axes()[0].size, nz = j.axes()[1].size, nv = j.axes()[2].size, ny = j.axes()[3].size;
  auto at = [&](std::size_t x, std::size_t z, std::size_t v, std::size_t y) {
    return j[((x * nz + z) * nv + v) * ny + y];
  };
  MarkovGaps gaps;
  // Z - X - V: for every x, p(z,v|x) against p(z|x) p(v|x)
  for (std::size_t x = 0; x < nx; ++x) {
    std::vector<double> zv(nz * nv, 0.0);
    double px = 0.0;
    for (std::size_t z = 0; z < nz; ++z)
      for (std::size_t v = 0; v < nv; ++v)
        for (std::size_t y = 0; y < ny; ++y) zv[z * nv + v] += at(x, z, v, y);
    for (double w : zv) px += w;
    if (px <= 0.0) continue;
    std::vector<double> pz(nz, 0.0), pv(nv, 0.0);
    for (std::size_t z = 0; z < nz; ++z)
      for (std::size_t v = 0; v < nv; ++v) {
        pz[z] += zv[z * nv + v] / px;
        pv[v] += zv[z * nv + v] / px;
      }
    double tv = 0.0;
    for (std::size_t z = 0; z < nz; ++z)
      for (std::size_t v = 0; v < nv; ++v) tv += std::abs(zv[z * nv + v] / px - pz[z] * pv[v]);
    gaps.z_x_v = std::max(gaps.z_x_v, 0.5 * tv);
  }
  // X - (Z,V) - Y: for every (z,v), p(x,y|z,v) against p(x|z,v) p(y|z,v)
  for (std::size_t z = 0; z < nz; ++z)
    for (std::size_t v = 0; v < nv; ++v) {
      double pzv = 0.0;
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y) pzv += at(x, z, v, y);
      if (pzv <= 0.0) continue;
      std::vector<double> px(nx, 0.0), py(ny, 0.0);
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y) {
          px[x] += at(x, z, v, y) / pzv;
          py[y] += at(x, z, v, y) / pzv;
        }
      double tv = 0.0;
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y) tv += std::abs(at(x, z, v, y) / pzv - px[x] * py[y]);
      gaps.x_zv_y = std::max(gaps.x_zv_y, 0.5 * tv);
    }
  return gaps;
}

// ---------------------------------------------------------------- optimizer core

namespace {

// Generic problem: encoder observes a symbol S with joint p(s,z); the decoder sees
// (Z,V) and emits Y with p_Y pinned to `target`; cost(s,y) is the distortion.
struct Core {
  std::size_t ns = 0, nz = 0, ny = 0, nv = 0;
  std::vector<double> psz;     // ns x nz
  std::vector<double> cost;    // ns x ny
  std::vector<double> target;  // ny
};

struct Workspace {
  std::vector<double> pzv, pvz_cond, costzv, trial, grad, probe;
};

void normalize_rows(std::vector<double>& enc, std::size_t ns, std::size_t nv) {
  for (std::size_t s = 0; s < ns; ++s) {
    double t = 0.0;
    for (std::size_t v = 0; v < nv; ++v) t += std::max(enc[s * nv + v], 0.0);
    for (std::size_t v = 0; v < nv; ++v) enc[s * nv + v] = t > 0 ? std::max(enc[s * nv + v], 0.0) / t : 1.0 / nv;
  }
}

// I(S;V|Z) in bits for p(s,z) enc(v|s).
double core_rate(const Core& c, const std::vector<double>& enc, Workspace& w) {
  w.pzv.assign(c.nz * c.nv, 0.0);
  for (std::size_t s = 0; s < c.ns; ++s)
    for (std::size_t z = 0; z < c.nz; ++z) {
      const double p = c.psz[s * c.nz + z];
      if (p <= 0.0) continue;
      for (std::size_t v = 0; v < c.nv; ++v) w.pzv[z * c.nv + v] += p * enc[s * c.nv + v];
    }
  double rate = 0.0;
  for (std::size_t z = 0; z < c.nz; ++z) {
    double pz = 0.0;
    for (std::size_t s = 0; s < c.ns; ++s) pz += c.psz[s * c.nz + z];
    if (pz <= 0.0) continue;
    for (std::size_t s = 0; s < c.ns; ++s) {
      const double p = c.psz[s * c.nz + z];
      if (p <= 0.0) continue;
      for (std::size_t v = 0; v < c.nv; ++v) {
        const double e = enc[s * c.nv + v];
        if (e <= 0.0) continue;
        rate += p * e * std::log2(e * pz / w.pzv[z * c.nv + v]);
      }
    }
  }
  return rate;
}

// Optimal realism-preserving decoder cost; leaves p(z,v) in w.pzv.
double core_distortion(const Core& c, const std::vector<double>& enc, Workspace& w, TransportPlan* plan_out) {
  w.pzv.assign(c.nz * c.nv, 0.0);
  w.costzv.assign(c.nz * c.nv * c.ny, 0.0);
  for (std::size_t s = 0; s < c.ns; ++s)
    for (std::size_t z = 0; z < c.nz; ++z) {
      const double p = c.psz[s * c.nz + z];
      if (p <= 0.0) continue;
      for (std::size_t v = 0; v < c.nv; ++v) {
        const double m = p * enc[s * c.nv + v];
        if (m <= 0.0) continue;
        w.pzv[z * c.nv + v] += m;
        for (std::size_t y = 0; y < c.ny; ++y) w.costzv[(z * c.nv + v) * c.ny + y] += m * c.cost[s * c.ny + y];
      }
    }
  for (std::size_t r = 0; r < c.nz * c.nv; ++r) {
    for (std::size_t y = 0; y < c.ny; ++y) {
      w.costzv[r * c.ny + y] = w.pzv[r] > 0.0 ? w.costzv[r * c.ny + y] / w.pzv[r] : 0.0;
    }
  }
  TransportPlan plan = solve_transport(w.pzv, c.target, w.costzv);
  const double value = plan.cost;
  if (plan_out) *plan_out = std::move(plan);
  return value;
}

struct Weights {
  double rate = 1.0;
  double distortion = 0.0;  // linear weight (distortion-only search)
  double penalty = 0.0;     // quadratic weight on (D - delta)^+
  double delta = 0.0;
};

double objective(const Core& c, const std::vector<double>& enc, const Weights& wt, Workspace& w) {
  double f = 0.0;
  if (wt.rate != 0.0) f += wt.rate * core_rate(c, enc, w);
  if (wt.distortion != 0.0 || wt.penalty != 0.0) {
    const double d = core_distortion(c, enc, w, nullptr);
    f += wt.distortion * d;
    const double viol = std::max(0.0, d - wt.delta);
    f += wt.penalty * viol * viol;
  }
  return f;
}

// Euclidean projection of each row onto the probability simplex.
void project_rows(std::vector<double>& enc, std::size_t ns, std::size_t nv) {
  std::vector<double> u(nv);
  for (std::size_t s = 0; s < ns; ++s) {
    double* row = &enc[s * nv];
    std::copy(row, row + nv, u.begin());
    std::sort(u.begin(), u.end(), std::greater<>());
    double css = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < nv; ++k) {
      css += u[k];
      const double t = (css - 1.0) / static_cast<double>(k + 1);
      if (u[k] - t > 0.0) theta = t;
    }
    for (std::size_t k = 0; k < nv; ++k) row[k] = std::max(row[k] - theta, 0.0);
  }
  normalize_rows(enc, ns, nv);
}

void fd_gradient(const Core& c, const std::vector<double>& enc, const Weights& wt, Workspace& w, double f0) {
  constexpr double h = 1e-7;
  const std::size_t n = enc.size();
  w.grad.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool can_down = enc[i] >= h;
    w.probe = enc;
    w.probe[i] += h;
    normalize_rows(w.probe, c.ns, c.nv);
    const double fp = objective(c, w.probe, wt, w);
    if (can_down) {
      w.probe = enc;
      w.probe[i] -= h;
      normalize_rows(w.probe, c.ns, c.nv);
      const double fm = objective(c, w.probe, wt, w);
      w.grad[i] = (fp - fm) / (2 * h);
    } else {
      w.grad[i] = (fp - f0) / h;
    }
  }
}

void projected_descent(const Core& c, std::vector<double>& enc, const Weights& wt, std::size_t iters, Workspace& w) {
  double f = objective(c, enc, wt, w);
  double step = 0.25;
  for (std::size_t it = 0; it < iters; ++it) {
    fd_gradient(c, enc, wt, w, f);
    bool accepted = false;
    for (int tries = 0; tries < 40; ++tries) {
      w.trial.resize(enc.size());
      for (std::size_t i = 0; i < enc.size(); ++i) w.trial[i] = enc[i] - step * w.grad[i];
      project_rows(w.trial, c.ns, c.nv);
      double decrease = 0.0;
      for (std::size_t i = 0; i < enc.size(); ++i) decrease += w.grad[i] * (enc[i] - w.trial[i]);
      const double ft = objective(c, w.trial, wt, w);
      if (ft <= f - 1e-4 * decrease && ft < f) {
        const double gain = f - ft;
        enc.swap(w.trial);
        f = ft;
        step = std::min(step * 2.0, 1e6);
        accepted = true;
        if (gain < 1e-14) it = iters;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
}

// Derivative-free polish by pairwise mass transfers within encoder rows; copes with
// the kinks of the transport value where gradient steps stall.
void pattern_search(const Core& c, std::vector<double>& enc, const Weights& wt, Workspace& w, std::size_t max_evals) {
  double f = objective(c, enc, wt, w);
  std::size_t evals = 0;
  for (double h = 0.05; h > 1e-9 && evals < max_evals; h *= 0.25) {
    bool improved = true;
    while (improved && evals < max_evals) {
      improved = false;
      for (std::size_t s = 0; s < c.ns; ++s)
        for (std::size_t a = 0; a < c.nv; ++a)
          for (std::size_t b = 0; b < c.nv; ++b) {
            if (a == b) continue;
            const double move = std::min(h, enc[s * c.nv + a]);
            if (move <= 0.0) continue;
            w.trial = enc;
            w.trial[s * c.nv + a] -= move;
            w.trial[s * c.nv + b] += move;
            const double ft = objective(c, w.trial, wt, w);
            ++evals;
            if (ft < f - 1e-15) {
              enc.swap(w.trial);
              f = ft;
              improved = true;
            }
          }
    }
  }
}

// Simultaneous transfers in two rows: slides along the distortion boundary where
// single-row moves are blocked.
void paired_search(const Core& c, std::vector<double>& enc, const Weights& wt, Workspace& w, std::size_t max_evals) {
  double f = objective(c, enc, wt, w);
  std::size_t evals = 0;
  const std::size_t nv = c.nv;
  for (double h = 0.02; h > 1e-8 && evals < max_evals; h *= 0.25) {
    bool improved = true;
    while (improved && evals < max_evals) {
      improved = false;
      for (std::size_t s1 = 0; s1 < c.ns; ++s1)
        for (std::size_t s2 = s1 + 1; s2 < c.ns; ++s2)
          for (std::size_t a1 = 0; a1 < nv; ++a1)
            for (std::size_t b1 = 0; b1 < nv; ++b1)
              for (std::size_t a2 = 0; a2 < nv; ++a2)
                for (std::size_t b2 = 0; b2 < nv; ++b2) {
                  if (a1 == b1 || a2 == b2) continue;
                  const double m1 = std::min(h, enc[s1 * nv + a1]);
                  const double m2 = std::min(h, enc[s2 * nv + a2]);
                  if (m1 <= 0.0 || m2 <= 0.0) continue;
                  w.trial = enc;
                  w.trial[s1 * nv + a1] -= m1;
                  w.trial[s1 * nv + b1] += m1;
                  w.trial[s2 * nv + a2] -= m2;
                  w.trial[s2 * nv + b2] += m2;
                  const double ft = objective(c, w.trial, wt, w);
                  ++evals;
                  if (ft < f - 1e-15) {
                    enc.swap(w.trial);
                    f = ft;
                    improved = true;
                  }
                }
    }
  }
}

struct Candidate {
  std::vector<double> enc;
  double rate = std::numeric_limits<double>::infinity();
  double distortion = std::numeric_limits<double>::infinity();
  bool feasible = false;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.feasible != b.feasible) return a.feasible;
  constexpr double tie = 1e-12;
  if (a.rate < b.rate - tie) return true;
  if (a.rate > b.rate + tie) return false;
  return a.distortion < b.distortion - tie;
}

std::vector<double> random_encoder(const Core& c, Rng& rng) {
  std::vector<double> enc(c.ns * c.nv);
  for (auto& e : enc) e = -std::log(1.0 - rng.uniform());
  normalize_rows(enc, c.ns, c.nv);
  return enc;
}

// Encoder with the smallest optimal-decoder distortion: V = S when |V| ≥ |S|,
// otherwise the best of a distortion-only multi-start search.
std::vector<double> min_distortion_encoder(const Core& c, std::uint64_t seed, std::size_t starts, std::size_t iters) {
  if (c.nv >= c.ns) {
    std::vector<double> enc(c.ns * c.nv, 0.0);
    for (std::size_t s = 0; s < c.ns; ++s) enc[s * c.nv + s] = 1.0;
    return enc;
  }
  Weights wt{0.0, 1.0, 0.0, 0.0};
  std::vector<std::vector<double>> encs(starts);
  std::vector<double> vals(starts);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(starts); ++k) {
    Workspace w;
    Rng rng(derive_seed(seed, "min-distortion-start", static_cast<std::uint64_t>(k)));
    auto enc = random_encoder(c, rng);
    projected_descent(c, enc, wt, iters * 3, w);
    vals[k] = core_distortion(c, enc, w, nullptr);
    encs[k] = std::move(enc);
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < starts; ++k)
    if (vals[k] < vals[best] - 1e-12) best = k;
  return encs[best];
}

// Smallest t in [0,1] with D((1-t) enc + t anchor) ≤ delta.
std::vector<double> repair_towards(const Core& c, const std::vector<double>& enc, const std::vector<double>& anchor,
                                   double delta, Workspace& w) {
  auto mix = [&](double t) {
    std::vector<double> m(enc.size());
    for (std::size_t i = 0; i < enc.size(); ++i) m[i] = (1 - t) * enc[i] + t * anchor[i];
    return m;
  };
  if (core_distortion(c, enc, w, nullptr) <= delta) return enc;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (core_distortion(c, mix(mid), w, nullptr) <= delta)
      hi = mid;
    else
      lo = mid;
  }
  return mix(hi);
}

struct CoreResult {
  bool feasible = false;
  std::vector<double> enc;
  double min_distortion = 0.0;
};

CoreResult solve_core(const Core& c, double delta, const SolverOptions& opts,
                      const std::vector<std::vector<double>>& warm, const std::vector<std::vector<double>>& fixed) {
  if (!(delta >= 0.0)) throw_argument("min_rate: delta must be >= 0");
  const double feas_delta = delta + 1e-10;
  CoreResult out;
  const auto anchor = min_distortion_encoder(c, derive_seed(opts.seed, "anchor"), std::max<std::size_t>(opts.starts, 4),
                                             opts.iters_per_stage);
  {
    Workspace w;
    out.min_distortion = core_distortion(c, anchor, w, nullptr);
  }
  if (out.min_distortion > delta + 1e-9) {
    out.feasible = false;
    out.enc = anchor;
    return out;
  }

  const std::size_t total = warm.size() + opts.starts;
  std::vector<Candidate> cands(total + fixed.size());
  // Penalty schedule on (D - delta)^+; the last stage is followed by an exact
  // feasibility repair towards the minimum-distortion encoder.
  const double mus[] = {1e2, 1e3, 1e4, 1e5, 1e6};
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(total); ++k) {
    Workspace w;
    std::vector<double> enc;
    if (static_cast<std::size_t>(k) < warm.size()) {
      enc = warm[static_cast<std::size_t>(k)];
    } else {
      Rng rng(derive_seed(opts.seed, "start", static_cast<std::uint64_t>(k) - warm.size()));
      enc = random_encoder(c, rng);
    }
    enc = repair_towards(c, enc, anchor, delta, w);
    for (double mu : mus) {
      const Weights wt{1.0, 0.0, mu, delta};
      projected_descent(c, enc, wt, opts.iters_per_stage, w);
      pattern_search(c, enc, wt, w, 40 * opts.iters_per_stage);
    }
    paired_search(c, enc, Weights{1.0, 0.0, mus[4], delta}, w, 100 * opts.iters_per_stage);
    enc = repair_towards(c, enc, anchor, delta, w);
    Candidate& cd = cands[static_cast<std::size_t>(k)];
    cd.rate = core_rate(c, enc, w);
    cd.distortion = core_distortion(c, enc, w, nullptr);
    cd.feasible = cd.distortion <= feas_delta;
    cd.enc = std::move(enc);
  }
  for (std::size_t f = 0; f < fixed.size(); ++f) {
    Workspace w;
    Candidate& cd = cands[total + f];
    cd.enc = fixed[f];
    cd.rate = core_rate(c, cd.enc, w);
    cd.distortion = core_distortion(c, cd.enc, w, nullptr);
    cd.feasible = cd.distortion <= feas_delta;
  }
  // anchor is always feasible here
  Candidate anchor_cd;
  {
    Workspace w;
    anchor_cd.enc = anchor;
    anchor_cd.rate = core_rate(c, anchor, w);
    anchor_cd.distortion = out.min_distortion;
    anchor_cd.feasible = true;
  }
  cands.push_back(std::move(anchor_cd));

  std::size_t best = 0;
  for (std::size_t k = 1; k < cands.size(); ++k)
    if (better(cands[k], cands[best])) best = k;
  out.feasible = cands[best].feasible;
  out.enc = cands[best].enc;
  return out;
}

Channel decoder_from_core(const Core& c, const std::vector<double>& enc, std::size_t out_size,
                          const std::vector<std::size_t>& y_map) {
  Workspace w;
  TransportPlan plan;
  core_distortion(c, enc, w, &plan);
  const std::size_t rows = c.nz * c.nv;
  std::vector<double> probs(rows * out_size, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double total = 0.0;
    for (std::size_t y = 0; y < c.ny; ++y) total += plan.flow[r * c.ny + y];
    for (std::size_t y = 0; y < c.ny; ++y) {
      const double p = total > 0.0 ? plan.flow[r * c.ny + y] / total : 1.0 / static_cast<double>(c.ny);
      probs[r * out_size + y_map[y]] += p;
    }
  }
  return Channel({{"Z", c.nz}, {"V", c.nv}}, {{"Y", out_size}}, std::move(probs));
}

Core make_d_core(const SourceSpec& source, std::size_t v_size) {
  Core c;
  c.ns = source.x_size();
  c.nz = source.z_size();
  c.ny = source.x_size();
  c.nv = v_size;
  c.psz.assign(source.pxz().probs().begin(), source.pxz().probs().end());
  c.cost = source.distortion_flat();
  const FinitePmf px = source.px();
  c.target.assign(px.probs().begin(), px.probs().end());
  return c;
}

// The encoder sees S = (X,Z). Since the lifted distortion ignores the Ẑ half of the
// reconstruction, pinning p_{X̂,Ẑ} = p_{X,Z} is equivalent to pinning p_{X̂} = p_X and
// completing Ẑ through p_{Z|X=X̂}; the core therefore only tracks X̂.
Core make_ed_core(const SourceSpec& source, std::size_t v_size) {
  Core c;
  const std::size_t nx = source.x_size(), nz = source.z_size();
  c.ns = nx * nz;
  c.nz = nz;
  c.ny = nx;
  c.nv = v_size;
  c.psz.assign(c.ns * nz, 0.0);
  c.cost.assign(c.ns * nx, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t z = 0; z < nz; ++z) {
      c.psz[(x * nz + z) * nz + z] = source.pxz()[x * nz + z];
      for (std::size_t y = 0; y < nx; ++y) c.cost[(x * nz + z) * nx + y] = source.d(x, y);
    }
  const FinitePmf px = source.px();
  c.target.assign(px.probs().begin(), px.probs().end());
  return c;
}

std::vector<double> encoder_rows(const Channel& enc, std::size_t ns, std::size_t nv) {
  if (enc.output_size() != nv || enc.input_size() != ns) {
    throw_argument("warm start encoder has the wrong shape");
  }
  return std::vector<double>(enc.probs().begin(), enc.probs().end());
}

void check_common(const SourceSpec&, double delta, std::size_t v_size, const SolverOptions& opts) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw_argument("delta must be finite and >= 0");
  if (v_size == 0) throw_argument("v_size must be >= 1");
  if (!(opts.realism_tol >= 0.0)) throw_argument("realism_tol must be >= 0");
}

SolveResult finish(const SourceSpec& source, double delta, std::size_t v_size, const SolverOptions& opts,
                   const CoreResult& cr, Channel enc, Channel dec) {
  SolveResult res;
  res.delta = delta;
  res.v_size = v_size;
  res.min_distortion_found = cr.min_distortion;
  FeasiblePoint fp = assemble(source, enc, dec);
  res.point = evaluate(fp, source);
  res.feasible = cr.feasible && res.point.distortion <= delta + 1e-9 && res.point.realism_gap <= opts.realism_tol;
  res.solution = std::move(fp);
  return res;
}

}  // namespace

SolveResult min_rate(const SourceSpec& source, double delta, std::size_t v_size, const SolverOptions& opts) {
  check_common(source, delta, v_size, opts);
  const Core c = make_d_core(source, v_size);
  std::vector<std::vector<double>> warm, fixed;
  for (const auto& ch : opts.warm_starts) {
    warm.push_back(encoder_rows(ch, c.ns, c.nv));
    fixed.push_back(warm.back());
  }
  const CoreResult cr = solve_core(c, delta, opts, warm, fixed);
  std::vector<std::size_t> ymap(c.ny);
  std::iota(ymap.begin(), ymap.end(), 0);
  Channel enc({{"X", c.ns}}, {{"V", v_size}}, cr.enc);
  Channel dec = decoder_from_core(c, cr.enc, source.x_size(), ymap);
  return finish(source, delta, v_size, opts, cr, std::move(enc), std::move(dec));
}

SolveResult ed_min_rate(const SourceSpec& source, double delta, std::size_t v_size, const SolverOptions& opts) {
  check_common(source, delta, v_size, opts);
  const std::size_t nx = source.x_size(), nz = source.z_size();
  const Core c = make_ed_core(source, v_size);

  // An encoder that ignores Z is admissible here, so the decoder-side solution is a
  // candidate as it stands.
  SolverOptions d_opts = opts;
  d_opts.warm_starts.clear();
  const SolveResult d_res = min_rate(source, delta, v_size, d_opts);
  std::vector<std::vector<double>> warm, fixed;
  if (d_res.solution) {
    std::vector<double> lifted(c.ns * v_size);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t z = 0; z < nz; ++z)
        for (std::size_t v = 0; v < v_size; ++v)
          lifted[(x * nz + z) * v_size + v] = d_res.solution->enc.at(x, v);
    warm.push_back(lifted);
    fixed.push_back(lifted);
  }
  for (const auto& ch : opts.warm_starts) {
    warm.push_back(encoder_rows(ch, c.ns, c.nv));
    fixed.push_back(warm.back());
  }
  const CoreResult cr = solve_core(c, delta, opts, warm, fixed);
  std::vector<std::size_t> ymap(nx);
  std::iota(ymap.begin(), ymap.end(), 0);
  Channel enc({{"X", nx}, {"Z", nz}}, {{"V", v_size}}, cr.enc);
  Channel dec = decoder_from_core(c, cr.enc, nx, ymap);
  SolveResult res = finish(source, delta, v_size, opts, cr, std::move(enc), std::move(dec));

  // realism on the pair: complete the decoder with Ẑ ~ p_{Z|X=Y} and compare with p_{X,Z}
  const Channel z_given_x = condition(source.pxz(), {"X"});
  const FinitePmf py = marginalize(res.solution->joint, {"Y"}).renamed({"X"});
  const FinitePmf pair = compose(py, z_given_x);
  res.point.realism_gap = total_variation(pair, source.pxz());
  res.feasible = cr.feasible && res.point.distortion <= delta + 1e-9 && res.point.realism_gap <= opts.realism_tol;
  return res;
}

std::vector<SolveResult> region_curve(const SourceSpec& source, const std::vector<double>& deltas, RegionMode mode,
                                      std::size_t v_size, const SolverOptions& opts) {
  std::vector<double> sorted = deltas;
  std::sort(sorted.begin(), sorted.end());
  std::vector<SolveResult> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    SolverOptions o = opts;
    o.seed = derive_seed(opts.seed, "curve", i);
    if (!out.empty() && out.back().solution) o.warm_starts.push_back(out.back().solution->enc);
    SolveResult r = mode == RegionMode::D ? min_rate(source, sorted[i], v_size, o) : ed_min_rate(source, sorted[i], v_size, o);
    // lower envelope: a point feasible at a smaller delta stays feasible here
    if (!out.empty() && out.back().feasible && (!r.feasible || out.back().point.rate < r.point.rate)) {
      const double d = r.delta;
      r = out.back();
      r.delta = d;
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------- grid oracle

namespace {

double xlogx_sum(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

// Compositions of `resolution` into `parts` non-negative integers.
void compositions(std::size_t parts, std::size_t resolution, std::vector<std::vector<std::size_t>>& out,
                  std::vector<std::size_t>& cur) {
  if (cur.size() + 1 == parts) {
    std::size_t used = 0;
    for (auto k : cur) used += k;
    cur.push_back(resolution - used);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  std::size_t used = 0;
  for (auto k : cur) used += k;
  for (std::size_t k = 0; k + used <= resolution; ++k) {
    cur.push_back(k);
    compositions(parts, resolution, out, cur);
    cur.pop_back();
  }
}

}  // namespace

RegionPoint brute_force_min_rate(const SourceSpec& source, double delta, std::size_t v_size, double grid_step) {
  const std::size_t nx = source.x_size(), nz = source.z_size(), nv = v_size;
  if (nx > 2 || nz > 2 || nv > 3 || nv == 0) throw_capacity("brute_force_min_rate: requires |X|,|Z| <= 2, v_size <= 3");
  if (!(grid_step > 0.0 && grid_step <= 1.0)) throw_argument("brute_force_min_rate: grid_step must be in (0,1]");
  const auto resolution = static_cast<std::size_t>(std::llround(1.0 / grid_step));
  if (resolution == 0 || resolution > 200) throw_capacity("brute_force_min_rate: grid too fine");

  std::vector<std::vector<std::size_t>> rows;
  std::vector<std::size_t> cur;
  compositions(nv, resolution, rows, cur);

  std::vector<double> pxz(source.pxz().probs().begin(), source.pxz().probs().end());
  std::vector<double> px(nx, 0.0), pz(nz, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t z = 0; z < nz; ++z) {
      px[x] += pxz[x * nz + z];
      pz[z] += pxz[x * nz + z];
    }
  const double h_xz = xlogx_sum(pxz), h_z = xlogx_sum(pz);

  RegionPoint best;
  best.rate = std::numeric_limits<double>::infinity();
  best.distortion = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> choice(nx, 0);
  const std::size_t combos = static_cast<std::size_t>(std::pow(static_cast<double>(rows.size()), static_cast<double>(nx)));
  std::vector<double> pxzv(nx * nz * nv), pzv(nz * nv);
  for (std::size_t combo = 0; combo < combos; ++combo) {
    std::size_t rem = combo;
    for (std::size_t x = 0; x < nx; ++x) {
      choice[x] = rem % rows.size();
      rem /= rows.size();
    }
    std::fill(pzv.begin(), pzv.end(), 0.0);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t z = 0; z < nz; ++z)
        for (std::size_t v = 0; v < nv; ++v) {
          const double e = static_cast<double>(rows[choice[x]][v]) / static_cast<double>(resolution);
          pxzv[(x * nz + z) * nv + v] = pxz[x * nz + z] * e;
          pzv[z * nv + v] += pxzv[(x * nz + z) * nv + v];
        }
    const double rate = std::max(0.0, h_xz + xlogx_sum(pzv) - h_z - xlogx_sum(pxzv));

    // Exact decoder for |Y| ≤ 2: move the cheapest mass (per unit) to y = 1 until
    // p_Y(1) = p_X(1).
    const std::size_t cells = nz * nv;
    std::vector<double> c0(cells, 0.0), c1(cells, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t r = 0; r < cells; ++r) {
        const double m = pxzv[x * cells + r];
        c0[r] += m * source.d(x, 0);
        if (nx == 2) c1[r] += m * source.d(x, 1);
      }
    double dist = 0.0;
    std::vector<double> to_one(cells, 0.0);
    if (nx == 1) {
      for (std::size_t r = 0; r < cells; ++r) dist += c0[r];
    } else {
      std::vector<std::size_t> order;
      for (std::size_t r = 0; r < cells; ++r)
        if (pzv[r] > 0.0) order.push_back(r);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return (c1[a] - c0[a]) / pzv[a] < (c1[b] - c0[b]) / pzv[b];
      });
      double need = px[1];
      for (std::size_t r : order) {
        const double take = std::min(need, pzv[r]);
        to_one[r] = take;
        need -= take;
        dist += c0[r] + (take / pzv[r]) * (c1[r] - c0[r]);
      }
    }
    if (dist > delta + 1e-10) continue;
    if (rate < best.rate - 1e-12 || (std::abs(rate - best.rate) <= 1e-12 && dist < best.distortion)) {
      best.rate = rate;
      best.distortion = dist;
      // I(Y;V) - I(Z;V) from p(z,v,y)
      std::vector<double> pvy(nv * nx, 0.0), pv(nv, 0.0), py(nx, 0.0);
      for (std::size_t z = 0; z < nz; ++z)
        for (std::size_t v = 0; v < nv; ++v) {
          const std::size_t r = z * nv + v;
          const double one = nx == 2 ? to_one[r] : 0.0;
          pvy[v * nx + 0] += pzv[r] - one;
          if (nx == 2) pvy[v * nx + 1] += one;
          pv[v] += pzv[r];
        }
      for (std::size_t v = 0; v < nv; ++v)
        for (std::size_t y = 0; y < nx; ++y) py[y] += pvy[v * nx + y];
      const double i_yv = xlogx_sum(pv) + xlogx_sum(py) - xlogx_sum(pvy);
      const double i_zv = xlogx_sum(pz) + xlogx_sum(pv) - xlogx_sum(pzv);
      best.rc_sum = i_yv - i_zv;
      best.realism_gap = 0.0;
    }
  }
  if (!std::isfinite(best.rate)) throw_numeric("brute_force_min_rate: no grid point meets the distortion constraint");
  return best;
}

}  // namespace rdp
