#pragma once

// Single-letter rate regions with side information under an exact realism
// constraint p_Y = p_X, for finite alphabets.
//
// A candidate auxiliary structure is a pair of channels p_{V|X} (encoder) and
// p_{Y|Z,V} (decoder). Assembling p_{X,Z} · p_{V|X} · p_{Y|Z,V} makes both Markov
// chains Z - X - V and X - (Z,V) - Y hold by construction. The optimizers below
// only ever return such assembled points, so every reported rate is an inner-bound
// (achievable) value at the stated |V|.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rdp/prob_core.hpp"

namespace rdp {

/// p_{X,Z} over axes ("X", "Z") and a distortion matrix d(x, y) over X × X.
class SourceSpec {
 public:
  SourceSpec(FinitePmf pxz, std::vector<std::vector<double>> distortion);

  const FinitePmf& pxz() const { return pxz_; }
  std::size_t x_size() const { return pxz_.axes()[0].size; }
  std::size_t z_size() const { return pxz_.axes()[1].size; }
  double d(std::size_t x, std::size_t y) const { return dist_[x * x_size() + y]; }
  double d_max() const;
  const std::vector<double>& distortion_flat() const { return dist_; }
  std::vector<std::vector<double>> distortion_rows() const;

  FinitePmf px() const;

  /// Hamming distortion over the source alphabet.
  static std::vector<std::vector<double>> hamming(std::size_t size);
  /// Doubly symmetric binary source: X uniform, Z = X xor Bern(q).
  static SourceSpec dsbs(double q);
  /// X ~ px, Z ~ pz independent, Hamming distortion.
  static SourceSpec independent(const std::vector<double>& px, const std::vector<double>& pz);

 private:
  FinitePmf pxz_;
  std::vector<double> dist_;
};

struct FeasiblePoint {
  Channel enc;  // V | X   (or V | X,Z for the encoder-side-information variant)
  Channel dec;  // Y | Z,V
  std::size_t v_size = 0;
  FinitePmf joint;  // over (X, Z, V, Y)
};

struct RegionPoint {
  double rate = 0.0;         // I(X;V|Z)
  double rc_sum = 0.0;       // I(Y;V) - I(Z;V), raw (may be negative)
  double distortion = 0.0;   // E d(X,Y)
  double realism_gap = 0.0;  // TV(p_Y, p_X)
};

FeasiblePoint assemble(const SourceSpec& source, const Channel& enc, const Channel& dec);

RegionPoint evaluate(const FeasiblePoint& point, const SourceSpec& source);

struct MarkovGaps {
  double z_x_v = 0.0;   // Z - X - V
  double x_zv_y = 0.0;  // X - (Z,V) - Y
};

/// Maximum over conditioning cells of TV between the actual and factorized
/// conditionals. `joint` must carry axes X, Z, V, Y.
MarkovGaps markov_check(const FinitePmf& joint);

struct SolverOptions {
  std::size_t starts = 32;
  std::uint64_t seed = 0;
  double realism_tol = 1e-6;
  std::size_t iters_per_stage = 60;
  /// Encoders (rows over V) tried as additional starts, e.g. a neighbouring solution.
  std::vector<Channel> warm_starts;
};

struct SolveResult {
  double delta = 0.0;
  std::size_t v_size = 0;
  bool feasible = false;
  RegionPoint point;
  std::optional<FeasiblePoint> solution;
  /// Smallest distortion reached by the search (the infeasibility witness).
  double min_distortion_found = 0.0;
  /// Always true: the search is heuristic, so rates are upper bounds on the boundary.
  bool inner_bound_only = true;
};

/// Default auxiliary cardinality |X|·|Z| + 2.
std::size_t default_v_size(const SourceSpec& source);

/// Minimum I(X;V|Z) subject to E d ≤ delta and p_Y = p_X over encoders with |V| = v_size.
SolveResult min_rate(const SourceSpec& source, double delta, std::size_t v_size, const SolverOptions& opts = {});

/// Same problem with the encoder also observing Z, solved on the augmented source
/// (X,Z) with lifted distortion d((x,z),(x',z')) = d(x,x').
SolveResult ed_min_rate(const SourceSpec& source, double delta, std::size_t v_size, const SolverOptions& opts = {});

/// Exhaustive grid oracle over encoder rows (step `grid_step`) with the exact
/// optimal realism-preserving decoder for binary reconstructions.
/// Requires |X|, |Z| ≤ 2 and v_size ≤ 3.
RegionPoint brute_force_min_rate(const SourceSpec& source, double delta, std::size_t v_size, double grid_step);

enum class RegionMode { D, ED };

/// min_rate / ed_min_rate over a delta grid with warm starts; rates are replaced by
/// their lower envelope so the curve is non-increasing in delta.
std::vector<SolveResult> region_curve(const SourceSpec& source, const std::vector<double>& deltas, RegionMode mode,
                                      std::size_t v_size, const SolverOptions& opts = {});

/// Distortion of independent reconstruction, E_{p_X ⊗ p_X} d.
double independent_distortion(const SourceSpec& source);

}  // namespace rdp
