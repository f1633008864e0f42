#include "rdp/prob_core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rdp/errors.hpp"

namespace rdp {

namespace {

void check_unique_names(const AxisList& axes, const char* what) {
  std::set<std::string> seen;
  for (const auto& a : axes) {
    if (a.size == 0) throw_argument(std::string(what) + ": axis '" + a.name + "' has size 0");
    if (!seen.insert(a.name).second) {
      throw_argument(std::string(what) + ": duplicate axis name '" + a.name + "'");
    }
  }
}

std::string describe(const AxisList& axes) {
  std::string s = "(";
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (i) s += ",";
    s += axes[i].name + ":" + std::to_string(axes[i].size);
  }
  return s + ")";
}

std::vector<std::size_t> strides_of(const AxisList& axes) {
  std::vector<std::size_t> strides(axes.size(), 1);
  for (std::size_t i = axes.size(); i-- > 1;) strides[i - 1] = strides[i] * axes[i].size;
  return strides;
}

// For every linear index of `full`, the linear index into the sub-tensor formed by
// the axes at `positions` (in that order).
std::vector<std::size_t> projection_map(const AxisList& full, const std::vector<std::size_t>& positions) {
  AxisList sub;
  for (auto pos : positions) sub.push_back(full[pos]);
  const auto sub_strides = strides_of(sub);
  const std::size_t n = support_size(full);
  std::vector<std::size_t> map(n);
  IndexCounter counter(full);
  for (std::size_t i = 0; i < n; ++i, counter.next()) {
    std::size_t s = 0;
    for (std::size_t k = 0; k < positions.size(); ++k) s += counter.digits()[positions[k]] * sub_strides[k];
    map[i] = s;
  }
  return map;
}

std::vector<std::size_t> positions_of(const FinitePmf& p, const AxisNames& names) {
  std::vector<std::size_t> pos;
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) throw_argument("axis '" + n + "' listed twice");
    pos.push_back(p.axis_position(n));
  }
  return pos;
}

}  // namespace

std::size_t support_size(const AxisList& axes) {
  std::size_t n = 1;
  for (const auto& a : axes) {
    if (a.size != 0 && n > kMaxSupport / a.size) {
      throw_capacity("support of " + describe(axes) + " exceeds 2^24 points");
    }
    n *= a.size;
  }
  if (n > kMaxSupport) throw_capacity("support of " + describe(axes) + " exceeds 2^24 points");
  return n;
}

IndexCounter::IndexCounter(const AxisList& axes) : digits_(axes.size(), 0) {
  for (const auto& a : axes) sizes_.push_back(a.size);
}

void IndexCounter::next() {
  for (std::size_t i = digits_.size(); i-- > 0;) {
    if (++digits_[i] < sizes_[i]) return;
    digits_[i] = 0;
  }
}

// ---------------------------------------------------------------- FinitePmf

FinitePmf::FinitePmf(AxisList axes, std::vector<double> probs) : axes_(std::move(axes)), probs_(std::move(probs)) {
  check_unique_names(axes_, "FinitePmf");
  if (probs_.size() != support_size(axes_)) {
    throw_argument("FinitePmf: " + std::to_string(probs_.size()) + " entries for axes " + describe(axes_));
  }
  double total = 0.0;
  for (double v : probs_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw_argument("FinitePmf: negative or non-finite entry");
    total += v;
  }
  if (std::abs(total - 1.0) > kConstructionTol) {
    throw_argument("FinitePmf: entries sum to " + std::to_string(total) + ", expected 1");
  }
  for (double& v : probs_) v /= total;
}

FinitePmf FinitePmf::from_weights(AxisList axes, std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw_argument("from_weights: negative or non-finite weight");
    total += w;
  }
  if (!(total > 0.0)) throw_argument("from_weights: all weights are zero");
  for (double& w : weights) w /= total;
  return FinitePmf(std::move(axes), std::move(weights));
}

FinitePmf FinitePmf::uniform(AxisList axes) {
  const std::size_t n = support_size(axes);
  return FinitePmf(std::move(axes), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

FinitePmf FinitePmf::point_mass(AxisList axes, const std::vector<std::size_t>& at) {
  if (at.size() != axes.size()) throw_argument("point_mass: index rank does not match axes");
  std::size_t lin = 0;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (at[i] >= axes[i].size) throw_argument("point_mass: index out of range on axis '" + axes[i].name + "'");
    lin = lin * axes[i].size + at[i];
  }
  std::vector<double> probs(support_size(axes), 0.0);
  probs[lin] = 1.0;
  return FinitePmf(std::move(axes), std::move(probs));
}

std::size_t FinitePmf::linear_index(const std::vector<std::size_t>& index) const {
  if (index.size() != axes_.size()) throw_argument("index rank does not match axes " + describe(axes_));
  std::size_t lin = 0;
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (index[i] >= axes_[i].size) throw_argument("index out of range on axis '" + axes_[i].name + "'");
    lin = lin * axes_[i].size + index[i];
  }
  return lin;
}

double FinitePmf::at(const std::vector<std::size_t>& index) const { return probs_[linear_index(index)]; }

std::size_t FinitePmf::axis_position(const std::string& name) const {
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (axes_[i].name == name) return i;
  }
  throw_argument("unknown axis '" + name + "' in " + describe(axes_));
}

bool FinitePmf::has_axis(const std::string& name) const {
  return std::any_of(axes_.begin(), axes_.end(), [&](const Axis& a) { return a.name == name; });
}

AxisNames FinitePmf::axis_names() const {
  AxisNames names;
  for (const auto& a : axes_) names.push_back(a.name);
  return names;
}

FinitePmf FinitePmf::renamed(const AxisNames& names) const {
  if (names.size() != axes_.size()) throw_argument("renamed: wrong number of names");
  AxisList axes = axes_;
  for (std::size_t i = 0; i < axes.size(); ++i) axes[i].name = names[i];
  return FinitePmf(std::move(axes), probs_);
}

// ---------------------------------------------------------------- Channel

Channel::Channel(AxisList inputs, AxisList outputs, std::vector<double> probs)
    : inputs_(std::move(inputs)), outputs_(std::move(outputs)), probs_(std::move(probs)) {
  AxisList all = inputs_;
  all.insert(all.end(), outputs_.begin(), outputs_.end());
  check_unique_names(all, "Channel");
  if (outputs_.empty()) throw_argument("Channel: no output axes");
  input_size_ = support_size(inputs_);
  output_size_ = support_size(outputs_);
  if (probs_.size() != input_size_ * output_size_) {
    throw_argument("Channel: " + std::to_string(probs_.size()) + " entries for " + describe(inputs_) + " -> " +
                   describe(outputs_));
  }
  for (std::size_t i = 0; i < input_size_; ++i) {
    double total = 0.0;
    for (std::size_t o = 0; o < output_size_; ++o) {
      const double v = probs_[i * output_size_ + o];
      if (!(v >= 0.0) || !std::isfinite(v)) throw_argument("Channel: negative or non-finite entry");
      total += v;
    }
    if (std::abs(total - 1.0) > kConstructionTol) {
      throw_argument("Channel: row " + std::to_string(i) + " sums to " + std::to_string(total));
    }
    for (std::size_t o = 0; o < output_size_; ++o) probs_[i * output_size_ + o] /= total;
  }
}

Channel Channel::identity(const Axis& input, const std::string& output_name) {
  std::vector<double> probs(input.size * input.size, 0.0);
  for (std::size_t i = 0; i < input.size; ++i) probs[i * input.size + i] = 1.0;
  return Channel({input}, {Axis{output_name, input.size}}, std::move(probs));
}

Channel Channel::constant(AxisList inputs, const FinitePmf& output) {
  const std::size_t rows = support_size(inputs);
  std::vector<double> probs;
  probs.reserve(rows * output.size());
  for (std::size_t i = 0; i < rows; ++i) probs.insert(probs.end(), output.probs().begin(), output.probs().end());
  return Channel(std::move(inputs), output.axes(), std::move(probs));
}

// ---------------------------------------------------------------- operations

FinitePmf marginalize(const FinitePmf& p, const AxisNames& keep) {
  auto pos = positions_of(p, keep);
  std::sort(pos.begin(), pos.end());  // kept axes stay in p's order
  AxisList axes;
  for (auto k : pos) axes.push_back(p.axes()[k]);
  const auto map = projection_map(p.axes(), pos);
  std::vector<double> out(support_size(axes), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) out[map[i]] += p[i];
  return FinitePmf(std::move(axes), std::move(out));
}

Channel condition(const FinitePmf& p, const AxisNames& given) {
  const auto given_pos = positions_of(p, given);
  if (given_pos.size() >= p.axes().size()) throw_argument("condition: given must be a strict subset of the axes");
  std::vector<std::size_t> rest_pos;
  for (std::size_t i = 0; i < p.axes().size(); ++i) {
    if (std::find(given_pos.begin(), given_pos.end(), i) == given_pos.end()) rest_pos.push_back(i);
  }
  AxisList in_axes, out_axes;
  for (auto k : given_pos) in_axes.push_back(p.axes()[k]);
  for (auto k : rest_pos) out_axes.push_back(p.axes()[k]);
  const auto in_map = projection_map(p.axes(), given_pos);
  const auto out_map = projection_map(p.axes(), rest_pos);
  const std::size_t rows = support_size(in_axes);
  const std::size_t cols = support_size(out_axes);
  std::vector<double> joint(rows * cols, 0.0);
  std::vector<double> marg(rows, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    joint[in_map[i] * cols + out_map[i]] += p[i];
    marg[in_map[i]] += p[i];
  }
  for (std::size_t r = 0; r < rows; ++r) {
    double row_total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) row_total += joint[r * cols + c];
    for (std::size_t c = 0; c < cols; ++c) {
      joint[r * cols + c] = row_total > 0.0 ? joint[r * cols + c] / row_total : 1.0 / static_cast<double>(cols);
    }
  }
  return Channel(std::move(in_axes), std::move(out_axes), std::move(joint));
}

FinitePmf compose(const FinitePmf& source, const Channel& ch) {
  std::vector<std::size_t> in_pos;
  for (const auto& a : ch.inputs()) {
    const auto k = source.axis_position(a.name);
    if (source.axes()[k].size != a.size) throw_argument("compose: size mismatch on axis '" + a.name + "'");
    in_pos.push_back(k);
  }
  for (const auto& a : ch.outputs()) {
    if (source.has_axis(a.name)) throw_argument("compose: output axis '" + a.name + "' already in source");
  }
  AxisList axes = source.axes();
  axes.insert(axes.end(), ch.outputs().begin(), ch.outputs().end());
  const std::size_t cols = ch.output_size();
  if (source.size() > kMaxSupport / cols) throw_capacity("compose: joint support exceeds 2^24 points");
  const auto in_map = projection_map(source.axes(), in_pos);
  std::vector<double> out(source.size() * cols);
  for (std::size_t s = 0; s < source.size(); ++s) {
    const auto row = ch.row(in_map[s]);
    for (std::size_t o = 0; o < cols; ++o) out[s * cols + o] = source[s] * row[o];
  }
  return FinitePmf(std::move(axes), std::move(out));
}

FinitePmf push_forward(const FinitePmf& source, const Channel& ch) {
  AxisNames outs;
  for (const auto& a : ch.outputs()) outs.push_back(a.name);
  return marginalize(compose(source, ch), outs);
}

FinitePmf product(const FinitePmf& p, const FinitePmf& q) {
  AxisList axes = p.axes();
  axes.insert(axes.end(), q.axes().begin(), q.axes().end());
  const std::size_t n = support_size(axes);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) out[i * q.size() + j] = p[i] * q[j];
  return FinitePmf(std::move(axes), std::move(out));
}

std::string block_axis_name(const std::string& name, std::size_t t) { return name + "[" + std::to_string(t) + "]"; }

FinitePmf product_power(const FinitePmf& p, std::size_t n) {
  if (n == 0) throw_argument("product_power: n must be positive");
  AxisList axes;
  for (std::size_t t = 0; t < n; ++t)
    for (const auto& a : p.axes()) axes.push_back(Axis{block_axis_name(a.name, t), a.size});
  const std::size_t total = support_size(axes);
  const std::size_t k = p.size();
  // probs[i] for tuple index i = (s_0, ..., s_{n-1}) in base k, s_0 most significant
  std::vector<double> out(total);
  out[0] = 1.0;
  std::size_t len = 1;
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t i = len; i-- > 0;) {
      const double base = out[i];
      for (std::size_t s = 0; s < k; ++s) out[i * k + s] = base * p[s];
    }
    len *= k;
  }
  return FinitePmf(std::move(axes), std::move(out));
}

double total_variation(const FinitePmf& p, const FinitePmf& q) {
  if (p.axes() != q.axes()) throw_argument("total_variation: pmfs have different axes");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return std::min(1.0, 0.5 * s);
}

Coupling maximal_coupling(const FinitePmf& p, const FinitePmf& q) {
  // axis names may differ between p and q; sizes must agree
  const AxisList& qa = q.axes();
  const AxisList& pa = p.axes();
  if (pa.size() != qa.size()) throw_argument("maximal_coupling: alphabets differ");
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].size != qa[i].size) throw_argument("maximal_coupling: alphabets differ");
  }
  const std::size_t n = p.size();
  if (n > kMaxSupport / n) throw_capacity("maximal_coupling: paired alphabet exceeds 2^24 points");
  AxisList axes = pa;
  for (const auto& a : pa) axes.push_back(Axis{a.name + "'", a.size});

  std::vector<double> joint(n * n, 0.0);
  std::vector<double> over(n), under(n);
  double tv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double common = std::min(p[i], q[i]);
    joint[i * n + i] = common;
    over[i] = p[i] - common;
    under[i] = q[i] - common;
    tv += over[i];
  }
  if (tv > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (over[i] <= 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (under[j] > 0.0) joint[i * n + j] += over[i] * under[j] / tv;
      }
    }
  }
  return Coupling{p, q, FinitePmf(std::move(axes), std::move(joint))};
}

double mismatch_probability(const Coupling& c) {
  const std::size_t n = c.left.size();
  double off = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) off += c.joint[i * n + j];
    }
  }
  return off;
}

Channel coupling_to_channel(const Coupling& c) {
  const std::size_t n = c.left.size();
  std::vector<double> probs(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double l = c.left[i];
    double row_total = 0.0;
    for (std::size_t j = 0; j < n; ++j) row_total += c.joint[i * n + j];
    for (std::size_t j = 0; j < n; ++j) {
      probs[i * n + j] = (l > 0.0 && row_total > 0.0) ? c.joint[i * n + j] / row_total : c.right[j];
    }
  }
  AxisList outs;
  for (const auto& a : c.left.axes()) outs.push_back(Axis{a.name + "'", a.size});
  return Channel(c.left.axes(), std::move(outs), std::move(probs));
}

}  // namespace rdp
