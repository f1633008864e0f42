#pragma once

// Exact finite-alphabet probability machinery: pmfs over named axes, channels,
// block (i.i.d.) extensions, total variation and maximal couplings.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace rdp {

inline constexpr double kStochasticTol = 1e-12;
// Inputs whose normalization is off by more than this are rejected at construction.
inline constexpr double kConstructionTol = 1e-9;
inline constexpr std::size_t kMaxSupport = std::size_t{1} << 24;

struct Axis {
  std::string name;
  std::size_t size = 0;

  friend bool operator==(const Axis&, const Axis&) = default;
};

using AxisList = std::vector<Axis>;
using AxisNames = std::vector<std::string>;

/// Product of the axis sizes; throws CapacityError above kMaxSupport.
std::size_t support_size(const AxisList& axes);

/// Row-major mixed-radix stride walker (last axis fastest).
class IndexCounter {
 public:
  explicit IndexCounter(const AxisList& axes);
  const std::vector<std::size_t>& digits() const { return digits_; }
  void next();

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> digits_;
};

/// Probability tensor over an ordered list of named finite axes.
class FinitePmf {
 public:
  /// Entries must be non-negative and sum to one within kConstructionTol; they are
  /// renormalized once here and never afterwards.
  FinitePmf(AxisList axes, std::vector<double> probs);

  static FinitePmf from_weights(AxisList axes, std::vector<double> weights);
  static FinitePmf uniform(AxisList axes);
  static FinitePmf point_mass(AxisList axes, const std::vector<std::size_t>& at);

  const AxisList& axes() const { return axes_; }
  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t linear) const { return probs_[linear]; }
  double at(const std::vector<std::size_t>& index) const;

  std::size_t linear_index(const std::vector<std::size_t>& index) const;
  std::size_t axis_position(const std::string& name) const;
  bool has_axis(const std::string& name) const;
  AxisNames axis_names() const;

  /// Same tensor with new axis names (sizes unchanged).
  FinitePmf renamed(const AxisNames& names) const;

 private:
  AxisList axes_;
  std::vector<double> probs_;
};

/// Conditional kernel from input axes to output axes; row-stochastic.
class Channel {
 public:
  Channel(AxisList inputs, AxisList outputs, std::vector<double> probs);

  static Channel identity(const Axis& input, const std::string& output_name);
  static Channel constant(AxisList inputs, const FinitePmf& output);

  const AxisList& inputs() const { return inputs_; }
  const AxisList& outputs() const { return outputs_; }
  std::size_t input_size() const { return input_size_; }
  std::size_t output_size() const { return output_size_; }
  std::span<const double> probs() const { return probs_; }
  std::span<const double> row(std::size_t input) const {
    return std::span<const double>(probs_).subspan(input * output_size_, output_size_);
  }
  double at(std::size_t input, std::size_t output) const {
    return probs_[input * output_size_ + output];
  }

 private:
  AxisList inputs_;
  AxisList outputs_;
  std::size_t input_size_ = 1;
  std::size_t output_size_ = 1;
  std::vector<double> probs_;
};

/// Joint law of a pair with prescribed marginals. The joint's axes are the left
/// axes followed by the right axes with a trailing prime.
struct Coupling {
  FinitePmf left;
  FinitePmf right;
  FinitePmf joint;
};

FinitePmf marginalize(const FinitePmf& p, const AxisNames& keep);

/// Conditional of the remaining axes given `given` (in the order listed).
/// Rows whose conditioning event has probability zero are uniform.
Channel condition(const FinitePmf& p, const AxisNames& given);

/// Joint over source axes followed by the channel outputs.
FinitePmf compose(const FinitePmf& source, const Channel& ch);

/// Output law of `ch` fed by `source` (compose then keep only the outputs).
FinitePmf push_forward(const FinitePmf& source, const Channel& ch);

/// Independent product p ⊗ q.
FinitePmf product(const FinitePmf& p, const FinitePmf& q);

/// Name of coordinate `t` of a block axis, e.g. "X[3]".
std::string block_axis_name(const std::string& name, std::size_t t);

/// n-fold i.i.d. extension with axes name[0..n-1] per original axis, t-major,
/// lexicographic in the tuple index.
FinitePmf product_power(const FinitePmf& p, std::size_t n);

double total_variation(const FinitePmf& p, const FinitePmf& q);

Coupling maximal_coupling(const FinitePmf& p, const FinitePmf& q);

/// Probability that the two coupled coordinates differ.
double mismatch_probability(const Coupling& c);

/// K(y'|y) = joint(y, y') / left(y); rows with left(y) = 0 emit the right marginal.
Channel coupling_to_channel(const Coupling& c);

}  // namespace rdp
