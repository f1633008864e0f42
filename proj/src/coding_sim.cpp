#include "rdp/coding_sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

#include "rdp/errors.hpp"
#include "rdp/info_measures.hpp"

namespace rdp::coding {

namespace {

std::size_t ipow(std::size_t base, std::size_t exp, std::size_t cap) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && r > cap / base) return cap + 1;
    r *= base;
  }
  return r;
}

void digits_of(std::size_t index, std::size_t alphabet, std::size_t n, std::vector<std::uint8_t>& out) {
  out.resize(n);
  for (std::size_t t = n; t-- > 0;) {
    out[t] = static_cast<std::uint8_t>(index % alphabet);
    index /= alphabet;
  }
}

AxisList block_axes(const std::string& name, std::size_t size, std::size_t n) {
  AxisList axes;
  for (std::size_t t = 0; t < n; ++t) axes.push_back(Axis{block_axis_name(name, t), size});
  return axes;
}

const Axis& single_axis(const AxisList& axes, const char* what) {
  if (axes.size() != 1) throw_argument(std::string(what) + ": expected a single axis");
  return axes[0];
}

Channel channel_given(const FinitePmf& joint, const std::string& given, const std::string& out) {
  return condition(marginalize(joint, {given, out}), {given});
}

}  // namespace

std::size_t sequence_index(std::span<const std::uint8_t> seq, std::size_t alphabet) {
  std::size_t idx = 0;
  for (auto s : seq) idx = idx * alphabet + s;
  return idx;
}

// ---------------------------------------------------------------- rate plan

std::size_t index_size(std::size_t n, double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw_argument("index_size: rate must be finite and >= 0");
  const double bits = static_cast<double>(n) * rate;
  if (bits > 62.0) throw_capacity("index_size: 2^{n·rate} exceeds 2^62");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::exp2(bits) + 1e-9)));
}

RatePlan fixed_plan(std::size_t n, double rate_m, double rate_mprime, double rate_j) {
  if (n == 0) throw_argument("plan: n must be >= 1");
  RatePlan p;
  p.n = n;
  p.rate_m = rate_m;
  p.rate_mprime = rate_mprime;
  p.rate_j = rate_j;
  p.size_m = index_size(n, rate_m);
  p.size_mprime = index_size(n, rate_mprime);
  p.size_j = index_size(n, rate_j);
  return p;
}

RatePlan plan_rates(const FeasiblePoint& point, std::size_t n, double epsilon, double rc) {
  if (!(epsilon > 0.0)) throw_argument("plan_rates: epsilon must be > 0");
  if (!(rc >= 0.0)) throw_argument("plan_rates: rc must be >= 0");
  const FinitePmf& j = point.joint;
  const double rate = std::max(0.0, conditional_mutual_information(j, {"X"}, {"V"}, {"Z"}));
  const double i_zv = std::max(0.0, mutual_information(j, {"Z"}, {"V"}));
  const double r_prime = i_zv > 1e-12 ? 0.5 * (std::max(0.0, i_zv - epsilon) + i_zv) : 0.0;
  RatePlan p = fixed_plan(n, rate + epsilon, r_prime, rc);
  p.epsilon = epsilon;
  p.i_xv = mutual_information(j, {"X"}, {"V"});
  p.i_zv = i_zv;
  p.i_yv = mutual_information(j, {"Y"}, {"V"});
  p.sum_rate_xv = p.rate_m + p.rate_mprime > p.i_xv;
  p.sum_rate_yv = p.rate_m + p.rate_mprime + p.rate_j > p.i_yv;
  if (!p.sum_rate_xv) p.warnings.push_back("rate_m + rate_mprime <= I(X;V)");
  if (!p.sum_rate_yv) p.warnings.push_back("rate_m + rate_mprime + rate_j <= I(Y;V)");
  const double nd = static_cast<double>(n);
  const double eff_xv = std::log2(static_cast<double>(p.size_m * p.size_mprime)) / nd;
  const double eff_yv = std::log2(static_cast<double>(p.codewords())) / nd;
  if (eff_xv <= p.i_xv) p.warnings.push_back("after flooring index sizes, log2(|M||M'|)/n <= I(X;V)");
  if (eff_yv <= p.i_yv) p.warnings.push_back("after flooring index sizes, log2(|M||M'||J|)/n <= I(Y;V)");
  return p;
}

// ---------------------------------------------------------------- codebook

Codebook Codebook::sub_codebook(std::size_t j) const {
  if (j >= plan.size_j) throw_argument("sub_codebook: j out of range");
  Codebook out;
  out.plan = plan;
  out.plan.size_j = 1;
  out.plan.rate_j = 0.0;
  out.alphabet = alphabet;
  out.seed = seed;
  out.words.reserve(plan.size_m * plan.size_mprime * plan.n);
  for (std::size_t m = 0; m < plan.size_m; ++m)
    for (std::size_t mp = 0; mp < plan.size_mprime; ++mp) {
      auto w = word(m, mp, j);
      out.words.insert(out.words.end(), w.begin(), w.end());
    }
  return out;
}

Codebook gen_codebook(const FinitePmf& pv, const RatePlan& plan, std::uint64_t seed) {
  const Axis& ax = single_axis(pv.axes(), "gen_codebook");
  if (ax.size > 256) throw_argument("gen_codebook: V alphabet must have at most 256 symbols");
  if (plan.n == 0) throw_argument("gen_codebook: n must be >= 1");
  const std::size_t count = plan.codewords();
  if (count > kMaxCodebookSymbols / plan.n) throw_capacity("gen_codebook: more than 2^26 codebook symbols");
  Codebook cb;
  cb.plan = plan;
  cb.alphabet = ax.size;
  cb.seed = seed;
  cb.words.resize(count * plan.n);
  Rng rng(seed);
  for (auto& s : cb.words) s = static_cast<std::uint8_t>(rng.categorical(pv.probs()));
  return cb;
}

namespace {
constexpr char kMagic[8] = {'R', 'D', 'P', 'C', 'B', '0', '1', '\0'};

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}
std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw_argument("read_codebook: truncated header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}
void put_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(os, v);
}
double get_f64(std::istream& is) {
  const std::uint64_t v = get_u64(is);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}
}  // namespace

void write_codebook(std::ostream& os, const Codebook& cb) {
  os.write(kMagic, 8);
  put_u64(os, cb.plan.n);
  put_u64(os, cb.plan.size_m);
  put_u64(os, cb.plan.size_mprime);
  put_u64(os, cb.plan.size_j);
  put_u64(os, cb.alphabet);
  put_u64(os, cb.seed);
  put_f64(os, cb.plan.rate_m);
  put_f64(os, cb.plan.rate_mprime);
  put_f64(os, cb.plan.rate_j);
  put_f64(os, cb.plan.epsilon);
  os.write(reinterpret_cast<const char*>(cb.words.data()), static_cast<std::streamsize>(cb.words.size()));
  if (!os) throw_capacity("write_codebook: write failed");
}

Codebook read_codebook(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw_argument("read_codebook: bad magic");
  Codebook cb;
  cb.plan.n = get_u64(is);
  cb.plan.size_m = get_u64(is);
  cb.plan.size_mprime = get_u64(is);
  cb.plan.size_j = get_u64(is);
  cb.alphabet = get_u64(is);
  cb.seed = get_u64(is);
  cb.plan.rate_m = get_f64(is);
  cb.plan.rate_mprime = get_f64(is);
  cb.plan.rate_j = get_f64(is);
  cb.plan.epsilon = get_f64(is);
  if (cb.plan.n == 0 || cb.alphabet == 0 || cb.alphabet > 256) throw_argument("read_codebook: bad header");
  const std::size_t count = cb.plan.size_m * cb.plan.size_mprime * cb.plan.size_j;
  if (count == 0 || count > kMaxCodebookSymbols / cb.plan.n) throw_capacity("read_codebook: codebook too large");
  cb.words.resize(count * cb.plan.n);
  if (!is.read(reinterpret_cast<char*>(cb.words.data()), static_cast<std::streamsize>(cb.words.size()))) {
    throw_argument("read_codebook: truncated symbol array");
  }
  for (auto s : cb.words)
    if (s >= cb.alphabet) throw_argument("read_codebook: symbol outside alphabet");
  return cb;
}

// ---------------------------------------------------------------- encoder / decoders

LikelihoodTable::LikelihoodTable(const Channel& x_given_v) {
  nv = single_axis(x_given_v.inputs(), "LikelihoodTable").size;
  nx = single_axis(x_given_v.outputs(), "LikelihoodTable").size;
  logp.resize(nv * nx);
  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t x = 0; x < nx; ++x) {
      const double p = x_given_v.at(v, x);
      logp[v * nx + x] = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    }
}

namespace {

void log_weights(const Codebook& cb, std::span<const std::uint8_t> xn, std::size_t j, const LikelihoodTable& lik,
                 std::vector<double>& lw) {
  if (xn.size() != cb.n()) throw_argument("encode: sequence length differs from n");
  if (j >= cb.plan.size_j) throw_argument("encode: j out of range");
  if (lik.nv != cb.alphabet) throw_argument("encode: likelihood table alphabet differs from the codebook");
  const std::size_t count = cb.plan.size_m * cb.plan.size_mprime;
  lw.resize(count);
  for (std::size_t m = 0; m < cb.plan.size_m; ++m)
    for (std::size_t mp = 0; mp < cb.plan.size_mprime; ++mp) {
      const auto w = cb.word(m, mp, j);
      double s = 0.0;
      for (std::size_t t = 0; t < xn.size(); ++t) s += lik(w[t], xn[t]);
      lw[m * cb.plan.size_mprime + mp] = s;
    }
}

// Max-subtracted exponentials; returns false if every weight is zero.
bool normalize_log(std::vector<double>& lw) {
  const double mx = *std::max_element(lw.begin(), lw.end());
  if (!std::isfinite(mx)) return false;
  for (auto& v : lw) v = std::exp(v - mx);
  return true;
}

}  // namespace

std::vector<double> encoder_posterior(const Codebook& cb, std::span<const std::uint8_t> xn, std::size_t j,
                                      const LikelihoodTable& lik) {
  std::vector<double> lw;
  log_weights(cb, xn, j, lik, lw);
  if (!normalize_log(lw)) std::fill(lw.begin(), lw.end(), 1.0);
  double total = 0.0;
  for (double v : lw) total += v;
  for (auto& v : lw) v /= total;
  return lw;
}

EncodeResult encode(const Codebook& cb, std::span<const std::uint8_t> xn, std::size_t j, const LikelihoodTable& lik,
                    Rng& rng) {
  thread_local std::vector<double> lw;
  log_weights(cb, xn, j, lik, lw);
  EncodeResult r;
  std::size_t k;
  if (normalize_log(lw)) {
    k = rng.categorical(lw);
  } else {
    r.fallback = true;
    k = rng.below(lw.size());
  }
  r.m = k / cb.plan.size_mprime;
  r.mprime = k % cb.plan.size_mprime;
  return r;
}

double default_delta_typ(std::size_t n) { return 0.15 * std::pow(static_cast<double>(n), -1.0 / 3.0); }

DecodeResult decode_mprime(const Codebook& cb, std::size_t m, std::size_t j, std::span<const std::uint8_t> zn,
                           const FinitePmf& pvz, double delta_typ) {
  if (zn.size() != cb.n()) throw_argument("decode_mprime: sequence length differs from n");
  if (!(delta_typ > 0.0)) throw_argument("decode_mprime: delta_typ must be > 0");
  if (pvz.axes().size() != 2 || !pvz.has_axis("V") || !pvz.has_axis("Z")) {
    throw_argument("decode_mprime: pvz must have axes V and Z");
  }
  const std::size_t pv_pos = pvz.axis_position("V");
  const std::size_t nv = pvz.axes()[pv_pos].size, nz = pvz.axes()[1 - pv_pos].size;
  if (nv != cb.alphabet) throw_argument("decode_mprime: V alphabet differs from the codebook");
  std::vector<double> p(nv * nz);
  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t z = 0; z < nz; ++z) p[v * nz + z] = pv_pos == 0 ? pvz[v * nz + z] : pvz[z * nv + v];

  const double n = static_cast<double>(zn.size());
  // log p(z | v) for the fallback ranking
  std::vector<double> logc(nv * nz);
  for (std::size_t v = 0; v < nv; ++v) {
    double pv = 0.0;
    for (std::size_t z = 0; z < nz; ++z) pv += p[v * nz + z];
    for (std::size_t z = 0; z < nz; ++z) {
      logc[v * nz + z] = p[v * nz + z] > 0.0 ? std::log(p[v * nz + z] / pv) : -std::numeric_limits<double>::infinity();
    }
  }
  DecodeResult res;
  double best_ll = -std::numeric_limits<double>::infinity();
  std::size_t best = 0;
  bool best_typical = false;
  std::vector<std::size_t> counts(nv * nz);
  for (std::size_t a = 0; a < cb.plan.size_mprime; ++a) {
    std::fill(counts.begin(), counts.end(), 0);
    const auto w = cb.word(m, a, j);
    for (std::size_t t = 0; t < zn.size(); ++t) ++counts[w[t] * nz + zn[t]];
    bool typical = true;
    double ll = 0.0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      const double pi = static_cast<double>(counts[c]) / n;
      if (std::abs(pi - p[c]) > delta_typ * p[c]) typical = false;
      if (counts[c] > 0) ll += static_cast<double>(counts[c]) * logc[c];
    }
    if (typical) {
      if (res.typical == 0) res.mprime = a;
      ++res.typical;
    }
    // typical candidates outrank atypical ones; ties keep the lower index
    if ((typical && !best_typical) || (typical == best_typical && ll > best_ll)) {
      best_ll = ll;
      best = a;
      best_typical = typical;
    }
  }
  if (res.typical != 1) {
    res.flagged = true;
    res.mprime = best;
  }
  return res;
}

std::vector<std::uint8_t> decode_output(const Codebook& cb, std::size_t m, std::size_t mprime_hat, std::size_t j,
                                        std::span<const std::uint8_t> zn, const Channel& dec, Rng& rng) {
  if (zn.size() != cb.n()) throw_argument("decode_output: sequence length differs from n");
  if (dec.inputs().size() != 2 || dec.inputs()[1].size != cb.alphabet) {
    throw_argument("decode_output: decoder must map (Z, V) with V over the codebook alphabet");
  }
  const std::size_t nv = cb.alphabet;
  const auto w = cb.word(m, mprime_hat, j);
  std::vector<std::uint8_t> y(cb.n());
  for (std::size_t t = 0; t < y.size(); ++t) {
    y[t] = static_cast<std::uint8_t>(rng.categorical(dec.row(zn[t] * nv + w[t])));
  }
  return y;
}

// ---------------------------------------------------------------- exact laws

namespace {

struct OutputShape {
  std::size_t nw, outcomes, codewords;
  std::string name;
};

OutputShape check_output(const Codebook& cb, const Channel& emit) {
  const Axis& in = single_axis(emit.inputs(), "exact_output_marginal");
  const Axis& out = single_axis(emit.outputs(), "exact_output_marginal");
  if (in.size != cb.alphabet) throw_argument("exact_output_marginal: channel input differs from the codebook alphabet");
  OutputShape s{out.size, ipow(out.size, cb.n(), kMaxExactOutcomes), cb.plan.codewords(), out.name};
  if (s.outcomes > kMaxExactOutcomes) throw_capacity("exact_output_marginal: more than 2^20 block outcomes");
  if (s.codewords > kMaxExactCodewords) throw_capacity("exact_output_marginal: more than 2^14 codewords");
  return s;
}

// table[idx·L + c] = Π_{t in [t0, t0+len)} emit(w_t | v_t(c))
std::vector<double> half_table(const Codebook& cb, const Channel& emit, std::size_t nw, std::size_t t0,
                               std::size_t len) {
  const std::size_t L = cb.plan.codewords();
  std::size_t rows = 1;
  for (std::size_t i = 0; i < len; ++i) rows *= nw;
  std::vector<double> table(rows * L);
  std::vector<std::uint8_t> dig;
  for (std::size_t r = 0; r < rows; ++r) {
    digits_of(r, nw, len, dig);
    for (std::size_t c = 0; c < L; ++c) {
      const auto w = cb.word(c);
      double p = 1.0;
      for (std::size_t t = 0; t < len; ++t) p *= emit.at(w[t0 + t], dig[t]);
      table[r * L + c] = p;
    }
  }
  return table;
}

}  // namespace

FinitePmf exact_output_marginal(const Codebook& cb, const Channel& emit) {
  const OutputShape s = check_output(cb, emit);
  const std::size_t n = cb.n(), h = n / 2, l = n - h, L = s.codewords;
  const auto A = half_table(cb, emit, s.nw, 0, h);
  const auto B = half_table(cb, emit, s.nw, h, l);
  const std::size_t rows_h = A.size() / L, rows_l = B.size() / L;
  std::vector<double> probs(s.outcomes);
  const double inv = 1.0 / static_cast<double>(L);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t hi = 0; hi < static_cast<std::ptrdiff_t>(rows_h); ++hi) {
    const double* a = &A[static_cast<std::size_t>(hi) * L];
    for (std::size_t li = 0; li < rows_l; ++li) {
      const double* b = &B[li * L];
      double acc = 0.0;
      for (std::size_t c = 0; c < L; ++c) acc += a[c] * b[c];
      probs[static_cast<std::size_t>(hi) * rows_l + li] = acc * inv;
    }
  }
  return FinitePmf(block_axes(s.name, s.nw, n), std::move(probs));
}

FinitePmf exact_output_marginal_naive(const Codebook& cb, const Channel& emit) {
  const OutputShape s = check_output(cb, emit);
  const std::size_t n = cb.n();
  std::vector<double> probs(s.outcomes, 0.0);
  std::vector<std::uint8_t> dig;
  for (std::size_t o = 0; o < s.outcomes; ++o) {
    digits_of(o, s.nw, n, dig);
    double acc = 0.0;
    for (std::size_t c = 0; c < s.codewords; ++c) {
      const auto w = cb.word(c);
      double p = 1.0;
      for (std::size_t t = 0; t < n; ++t) p *= emit.at(w[t], dig[t]);
      acc += p;
    }
    probs[o] = acc / static_cast<double>(s.codewords);
  }
  return FinitePmf(block_axes(s.name, s.nw, n), std::move(probs));
}

namespace {

std::vector<SweepCell> sweep_impl(const FinitePmf& pv, const Channel& emit, const std::vector<double>& rates,
                                  double rate_j, std::optional<std::size_t> sub_j, const std::vector<std::size_t>& ns,
                                  std::size_t per_cell, std::uint64_t seed) {
  if (per_cell == 0) throw_argument("soft_cover_sweep: codebooks_per_cell must be >= 1");
  const FinitePmf pw = push_forward(pv, emit);
  const std::size_t nw = single_axis(emit.outputs(), "soft_cover_sweep").size;
  std::vector<SweepCell> cells;
  for (double r : rates)
    for (std::size_t n : ns) {
      if (n == 0) throw_argument("soft_cover_sweep: n must be >= 1");
      SweepCell c;
      c.rate = r;
      c.n = n;
      c.codebooks = per_cell;
      RatePlan plan = sub_j ? fixed_plan(n, std::max(0.0, r - rate_j), 0.0, rate_j) : fixed_plan(n, r, 0.0, 0.0);
      if (sub_j && *sub_j >= plan.size_j) throw_argument("soft_cover_sweep: j out of range for the rate split");
      c.codewords = sub_j ? plan.size_m : plan.codewords();
      c.skipped = ipow(nw, n, kMaxExactOutcomes) > kMaxExactOutcomes || c.codewords > kMaxExactCodewords ||
                  plan.codewords() * n > kMaxCodebookSymbols;
      cells.push_back(c);
    }
  const std::size_t jobs = cells.size() * per_cell;
  std::vector<double> tv(jobs, 0.0);
  // one target law per distinct n
  std::vector<std::optional<FinitePmf>> targets(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k)
    if (!cells[k].skipped) targets[k] = product_power(pw, cells[k].n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(jobs); ++q) {
    const std::size_t k = static_cast<std::size_t>(q) / per_cell, b = static_cast<std::size_t>(q) % per_cell;
    const SweepCell& c = cells[k];
    if (c.skipped) continue;
    RatePlan plan =
        sub_j ? fixed_plan(c.n, std::max(0.0, c.rate - rate_j), 0.0, rate_j) : fixed_plan(c.n, c.rate, 0.0, 0.0);
    const std::uint64_t s = derive_seed(derive_seed(seed, "codebook", b), "cell", k);
    Codebook cb = gen_codebook(pv, plan, s);
    if (sub_j) cb = cb.sub_codebook(*sub_j);
    tv[static_cast<std::size_t>(q)] = total_variation(exact_output_marginal(cb, emit), *targets[k]);
  }
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (cells[k].skipped) continue;
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t b = 0; b < per_cell; ++b) {
      const double v = tv[k * per_cell + b];
      s1 += v;
      s2 += v * v;
    }
    const double B = static_cast<double>(per_cell);
    cells[k].mean_tv = s1 / B;
    const double var = per_cell > 1 ? std::max(0.0, (s2 - s1 * s1 / B) / (B - 1)) : 0.0;
    cells[k].std_err = std::sqrt(var / B);
  }
  return cells;
}

}  // namespace

std::vector<SweepCell> soft_cover_sweep(const FinitePmf& pv, const Channel& emit, const std::vector<double>& rates,
                                        const std::vector<std::size_t>& ns, std::size_t codebooks_per_cell,
                                        std::uint64_t seed) {
  return sweep_impl(pv, emit, rates, 0.0, std::nullopt, ns, codebooks_per_cell, seed);
}

std::vector<SweepCell> soft_cover_sweep_subcodebook(const FinitePmf& pv, const Channel& emit,
                                                    const std::vector<double>& rates, double rate_j, std::size_t j,
                                                    const std::vector<std::size_t>& ns,
                                                    std::size_t codebooks_per_cell, std::uint64_t seed) {
  if (!(rate_j >= 0.0)) throw_argument("soft_cover_sweep_subcodebook: rate_j must be >= 0");
  return sweep_impl(pv, emit, rates, rate_j, j, ns, codebooks_per_cell, seed);
}

Channel perfect_realism_correct(const FinitePmf& p_out, const FinitePmf& target) {
  if (p_out.axes() != target.axes()) throw_argument("perfect_realism_correct: block alphabets differ");
  return coupling_to_channel(maximal_coupling(p_out, target));
}

namespace {

// per-letter averaged distortion for every (x-block, y-block) pair
std::vector<double> block_distortion_table(const SourceSpec& source, std::size_t n) {
  const std::size_t nx = source.x_size();
  const std::size_t N = ipow(nx, n, kMaxSupport);
  if (N * N > kMaxSupport) throw_capacity("block distortion table exceeds 2^24 entries");
  std::vector<double> d(N * N);
  std::vector<std::uint8_t> dx, dy;
  for (std::size_t a = 0; a < N; ++a) {
    digits_of(a, nx, n, dx);
    for (std::size_t b = 0; b < N; ++b) {
      digits_of(b, nx, n, dy);
      double s = 0.0;
      for (std::size_t t = 0; t < n; ++t) s += source.d(dx[t], dy[t]);
      d[a * N + b] = s / static_cast<double>(n);
    }
  }
  return d;
}

void check_xy_joint(const FinitePmf& joint, const SourceSpec& source, std::size_t n) {
  AxisList want = block_axes("X", source.x_size(), n);
  for (const auto& a : block_axes("Y", source.x_size(), n)) want.push_back(a);
  if (joint.axes() != want) throw_argument("joint must have axes X[0..n-1], Y[0..n-1]");
}

}  // namespace

double block_distortion(const FinitePmf& joint_xy, const SourceSpec& source, std::size_t n) {
  check_xy_joint(joint_xy, source, n);
  const auto d = block_distortion_table(source, n);
  double s = 0.0;
  for (std::size_t i = 0; i < joint_xy.size(); ++i) s += joint_xy[i] * d[i];
  return s;
}

double corrected_distortion(const FinitePmf& joint_xy, const Channel& k, const SourceSpec& source, std::size_t n) {
  check_xy_joint(joint_xy, source, n);
  const std::size_t N = ipow(source.x_size(), n, kMaxSupport);
  if (k.input_size() != N || k.output_size() != N) throw_argument("corrected_distortion: channel shape mismatch");
  const auto d = block_distortion_table(source, n);
  double s = 0.0;
  for (std::size_t x = 0; x < N; ++x)
    for (std::size_t y = 0; y < N; ++y) {
      const double p = joint_xy[x * N + y];
      if (p <= 0.0) continue;
      const auto row = k.row(y);
      double e = 0.0;
      for (std::size_t y2 = 0; y2 < N; ++y2) e += row[y2] * d[x * N + y2];
      s += p * e;
    }
  return s;
}

FinitePmf exact_scheme_joint(const FeasiblePoint& point, const SourceSpec& source, const Codebook& cb,
                             double delta_typ) {
  const std::size_t n = cb.n(), nx = source.x_size(), nz = source.z_size(), nv = cb.alphabet, ny = nx;
  if (point.v_size != nv) throw_argument("exact_scheme_joint: codebook alphabet differs from v_size");
  const std::size_t NX = ipow(nx, n, kMaxSupport), NZ = ipow(nz, n, kMaxSupport), NY = NX;
  if (NX > kMaxSupport || NZ > kMaxSupport || NX * NY > kMaxSupport) {
    throw_capacity("exact_scheme_joint: block support exceeds 2^24");
  }
  const auto& pl = cb.plan;
  const double ops = static_cast<double>(pl.size_j) * static_cast<double>(pl.size_m) * static_cast<double>(NX) *
                     static_cast<double>(NZ) * static_cast<double>(NY) +
                     static_cast<double>(pl.size_j) * static_cast<double>(NX) * static_cast<double>(pl.size_m) *
                         static_cast<double>(pl.size_mprime) * static_cast<double>(n);
  if (ops > kMaxSchemeOps) throw_capacity("exact_scheme_joint: enumeration exceeds 2^30 operations");

  const LikelihoodTable lik(channel_given(point.joint, "V", "X"));
  const FinitePmf pvz = marginalize(point.joint, {"Z", "V"});
  const Channel z_given_x = condition(source.pxz(), {"X"});
  const FinitePmf px = source.px();
  const Channel& dec = point.dec;

  // m̂'(m, j, z^n)
  std::vector<std::uint32_t> mhat(pl.size_m * pl.size_j * NZ);
  {
    std::vector<std::uint8_t> zd;
    for (std::size_t zi = 0; zi < NZ; ++zi) {
      digits_of(zi, nz, n, zd);
      for (std::size_t m = 0; m < pl.size_m; ++m)
        for (std::size_t j = 0; j < pl.size_j; ++j) {
          mhat[(m * pl.size_j + j) * NZ + zi] =
              static_cast<std::uint32_t>(decode_mprime(cb, m, j, zd, pvz, delta_typ).mprime);
        }
    }
  }

  std::vector<double> probs(NX * NY, 0.0);
  const double inv_j = 1.0 / static_cast<double>(pl.size_j);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t xi_s = 0; xi_s < static_cast<std::ptrdiff_t>(NX); ++xi_s) {
    const std::size_t xi = static_cast<std::size_t>(xi_s);
    std::vector<std::uint8_t> xd, zd;
    digits_of(xi, nx, n, xd);
    double p_x = 1.0;
    for (auto x : xd) p_x *= px[x];
    if (p_x <= 0.0) continue;
    std::vector<double> pz_given(NZ);
    for (std::size_t zi = 0; zi < NZ; ++zi) {
      digits_of(zi, nz, n, zd);
      double p = 1.0;
      for (std::size_t t = 0; t < n; ++t) p *= z_given_x.at(xd[t], zd[t]);
      pz_given[zi] = p;
    }
    std::vector<double> out(NY), tmp(NY);
    double* row = &probs[xi * NY];
    for (std::size_t j = 0; j < pl.size_j; ++j) {
      const auto post = encoder_posterior(cb, xd, j, lik);
      for (std::size_t m = 0; m < pl.size_m; ++m) {
        double wm = 0.0;
        for (std::size_t mp = 0; mp < pl.size_mprime; ++mp) wm += post[m * pl.size_mprime + mp];
        if (wm <= 0.0) continue;
        for (std::size_t zi = 0; zi < NZ; ++zi) {
          const double w = inv_j * p_x * wm * pz_given[zi];
          if (w <= 0.0) continue;
          digits_of(zi, nz, n, zd);
          const auto cw = cb.word(m, mhat[(m * pl.size_j + j) * NZ + zi], j);
          // Π_t dec(y_t | z_t, v_t), built by successive outer products
          std::size_t len = 1;
          out[0] = 1.0;
          for (std::size_t t = 0; t < n; ++t) {
            const auto r = dec.row(zd[t] * nv + cw[t]);
            for (std::size_t k = 0; k < len; ++k)
              for (std::size_t y = 0; y < ny; ++y) tmp[k * ny + y] = out[k] * r[y];
            len *= ny;
            std::copy(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(len), out.begin());
          }
          for (std::size_t y = 0; y < NY; ++y) row[y] += w * out[y];
        }
      }
    }
  }
  AxisList axes = block_axes("X", nx, n);
  for (const auto& a : block_axes("Y", ny, n)) axes.push_back(a);
  return FinitePmf(std::move(axes), std::move(probs));
}

// ---------------------------------------------------------------- simulation

SimReport simulate(const FeasiblePoint& point, const SourceSpec& source, const RatePlan& plan, const SimOptions& opts) {
  const auto t_start = std::chrono::steady_clock::now();
  if (opts.trials == 0) throw_argument("simulate: trials must be >= 1");
  if (plan.n == 0) throw_argument("simulate: n must be >= 1");
  if (point.joint.axis_position("X") != 0 || point.v_size == 0 || point.v_size > 256 || source.x_size() > 256 ||
      source.z_size() > 256) {
    throw_argument("simulate: point and source alphabets are inconsistent");
  }
  const std::size_t n = plan.n, nx = source.x_size(), nz = source.z_size();
  SimReport rep;
  rep.n = n;
  rep.plan = plan;
  rep.trials = opts.trials;
  rep.seed = opts.seed;
  rep.codebook_seed = derive_seed(opts.seed, "codebook");
  rep.delta_typ = opts.delta_typ > 0.0 ? opts.delta_typ : default_delta_typ(n);

  const FinitePmf pv = marginalize(point.joint, {"V"});
  const Codebook cb = gen_codebook(pv, plan, rep.codebook_seed);
  const LikelihoodTable lik(channel_given(point.joint, "V", "X"));
  const FinitePmf pvz = marginalize(point.joint, {"Z", "V"});
  const Channel& dec = point.dec;
  const FinitePmf& pxz = source.pxz();

  std::vector<std::uint8_t> ys(opts.trials * n), xs(opts.trials * n);
  std::vector<double> dist(opts.trials);
  std::vector<std::uint8_t> err(opts.trials), enc_fb(opts.trials), dec_fl(opts.trials);

#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i_s = 0; i_s < static_cast<std::ptrdiff_t>(opts.trials); ++i_s) {
    const std::size_t i = static_cast<std::size_t>(i_s);
    Rng rng(derive_seed(opts.seed, "trial", i));
    std::uint8_t* xn = &xs[i * n];
    std::vector<std::uint8_t> zn(n);
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t k = rng.categorical(pxz.probs());
      xn[t] = static_cast<std::uint8_t>(k / nz);
      zn[t] = static_cast<std::uint8_t>(k % nz);
    }
    const std::size_t j = static_cast<std::size_t>(rng.below(plan.size_j));
    const EncodeResult e = encode(cb, std::span<const std::uint8_t>(xn, n), j, lik, rng);
    const DecodeResult d = decode_mprime(cb, e.m, j, zn, pvz, rep.delta_typ);
    const auto yn = decode_output(cb, e.m, d.mprime, j, zn, dec, rng);
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) s += source.d(xn[t], yn[t]);
    std::copy(yn.begin(), yn.end(), ys.begin() + static_cast<std::ptrdiff_t>(i * n));
    dist[i] = s / static_cast<double>(n);
    err[i] = d.mprime != e.mprime;
    enc_fb[i] = e.fallback;
    dec_fl[i] = d.flagged;
  }

  const double T = static_cast<double>(opts.trials);
  auto mean_se = [&](const auto& v, double& mean, double& se) {
    double s1 = 0.0, s2 = 0.0;
    for (auto x : v) {
      s1 += static_cast<double>(x);
      s2 += static_cast<double>(x) * static_cast<double>(x);
    }
    mean = s1 / T;
    se = opts.trials > 1 ? std::sqrt(std::max(0.0, (s2 - s1 * s1 / T) / (T - 1)) / T) : 0.0;
  };
  mean_se(dist, rep.avg_distortion, rep.distortion_se);
  mean_se(err, rep.mprime_error_rate, rep.mprime_error_se);
  for (auto f : enc_fb) rep.encode_fallbacks += f;
  for (auto f : dec_fl) rep.decode_flagged += f;

  const FinitePmf px = source.px();
  auto per_letter_tv = [&](const std::vector<std::uint8_t>& seqs) {
    double acc = 0.0;
    std::vector<double> cnt(nx);
    for (std::size_t t = 0; t < n; ++t) {
      std::fill(cnt.begin(), cnt.end(), 0.0);
      for (std::size_t i = 0; i < opts.trials; ++i) cnt[seqs[i * n + t]] += 1.0;
      double tv = 0.0;
      for (std::size_t x = 0; x < nx; ++x) tv += std::abs(cnt[x] / T - px[x]);
      acc += 0.5 * tv;
    }
    return acc / static_cast<double>(n);
  };
  rep.tv_per_letter = per_letter_tv(ys);

  const std::size_t NX = ipow(nx, n, kMaxExactOutcomes);
  std::optional<FinitePmf> target;
  if (NX <= kMaxExactOutcomes) target = product_power(px.renamed({"Y"}), n);

  if (target && cb.plan.codewords() <= kMaxExactCodewords) {
    const Channel y_given_v = channel_given(point.joint, "V", "Y");
    rep.tv_exact = total_variation(exact_output_marginal(cb, y_given_v), *target);
  } else {
    rep.flags.push_back("tv_exact_skipped_guard");
  }

  std::optional<FinitePmf> scheme;
  if (opts.exact_scheme && target) {
    try {
      scheme = exact_scheme_joint(point, source, cb, rep.delta_typ);
    } catch (const CapacityError&) {
      rep.flags.push_back("tv_exact_scheme_skipped_guard");
    }
  } else if (opts.exact_scheme) {
    rep.flags.push_back("tv_exact_scheme_skipped_guard");
  }
  std::optional<FinitePmf> scheme_y;
  if (scheme) {
    AxisNames ynames;
    for (std::size_t t = 0; t < n; ++t) ynames.push_back(block_axis_name("Y", t));
    scheme_y = marginalize(*scheme, ynames);
    rep.tv_exact_scheme = total_variation(*scheme_y, *target);
  }

  if (opts.correct_realism) {
    if (scheme_y) {
      const Channel k = perfect_realism_correct(*scheme_y, *target);
      std::vector<std::uint8_t> ys2(ys.size());
      std::vector<double> dist2(opts.trials);
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i_s = 0; i_s < static_cast<std::ptrdiff_t>(opts.trials); ++i_s) {
        const std::size_t i = static_cast<std::size_t>(i_s);
        Rng rng(derive_seed(opts.seed, "correct", i));
        const std::size_t yi = sequence_index(std::span<const std::uint8_t>(&ys[i * n], n), nx);
        const std::size_t y2 = rng.categorical(k.row(yi));
        std::vector<std::uint8_t> dig;
        digits_of(y2, nx, n, dig);
        double s = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
          ys2[i * n + t] = dig[t];
          s += source.d(xs[i * n + t], dig[t]);
        }
        dist2[i] = s / static_cast<double>(n);
      }
      double m = 0.0, se = 0.0;
      mean_se(dist2, m, se);
      rep.corrected_avg_distortion = m;
      rep.corrected_tv_per_letter = per_letter_tv(ys2);
      rep.correction_applied = true;
    } else {
      rep.flags.push_back("correction_skipped_guard");
    }
  }
  if (rep.encode_fallbacks > 0) rep.flags.push_back("encoder_uniform_fallback");
  for (const auto& w : plan.warnings) rep.flags.push_back("plan: " + w);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return rep;
}

}  // namespace rdp::coding
