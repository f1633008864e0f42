#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rdp {

struct TransportPlan {
  std::vector<double> flow;  // rows x cols, row-major
  double cost = 0.0;
};

/// Minimum-cost transportation plan between `supply` (rows) and `demand` (columns)
/// with per-unit `cost` (rows x cols, row-major). Demand is rescaled to the supply
/// total. Solved exactly by successive shortest paths.
TransportPlan solve_transport(std::span<const double> supply, std::span<const double> demand,
                              std::span<const double> cost);

}  // namespace rdp
