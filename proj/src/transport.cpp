#include "rdp/transport.hpp"

#include <algorithm>
#include <limits>

#include "rdp/errors.hpp"

namespace rdp {

TransportPlan solve_transport(std::span<const double> supply, std::span<const double> demand,
                              std::span<const double> cost) {
  const std::size_t rows = supply.size();
  const std::size_t cols = demand.size();
  if (cost.size() != rows * cols) throw_argument("solve_transport: cost matrix has wrong size");
  if (cols == 0) throw_argument("solve_transport: no columns");

  double supply_total = 0.0, demand_total = 0.0;
  for (double s : supply) supply_total += s;
  for (double d : demand) demand_total += d;
  if (!(demand_total > 0.0)) throw_argument("solve_transport: demand is zero");

  constexpr double kEps = 1e-15;
  std::vector<double> left(supply.begin(), supply.end());
  std::vector<double> need(cols);
  for (std::size_t c = 0; c < cols; ++c) need[c] = demand[c] * supply_total / demand_total;

  TransportPlan plan;
  plan.flow.assign(rows * cols, 0.0);
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t nodes = rows + cols;  // rows first, then columns
  std::vector<double> dist(nodes);
  std::vector<std::ptrdiff_t> pred(nodes);

  const std::size_t max_rounds = 16 * (rows * cols + rows + cols) + 64;
  for (std::size_t round = 0; round < max_rounds; ++round) {
    // multi-source Bellman-Ford from rows with remaining supply
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(pred.begin(), pred.end(), -1);
    bool any_source = false;
    for (std::size_t r = 0; r < rows; ++r) {
      if (left[r] > kEps) {
        dist[r] = 0.0;
        any_source = true;
      }
    }
    if (!any_source) break;
    for (std::size_t pass = 0; pass < nodes; ++pass) {
      bool changed = false;
      for (std::size_t r = 0; r < rows; ++r) {
        if (dist[r] == inf) continue;
        for (std::size_t c = 0; c < cols; ++c) {
          const double nd = dist[r] + cost[r * cols + c];
          if (nd < dist[rows + c] - 1e-14) {
            dist[rows + c] = nd;
            pred[rows + c] = static_cast<std::ptrdiff_t>(r);
            changed = true;
          }
        }
      }
      for (std::size_t c = 0; c < cols; ++c) {
        if (dist[rows + c] == inf) continue;
        for (std::size_t r = 0; r < rows; ++r) {
          if (plan.flow[r * cols + c] <= kEps) continue;
          const double nd = dist[rows + c] - cost[r * cols + c];
          if (nd < dist[r] - 1e-14) {
            dist[r] = nd;
            pred[r] = static_cast<std::ptrdiff_t>(rows + c);
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    std::ptrdiff_t sink = -1;
    for (std::size_t c = 0; c < cols; ++c) {
      if (need[c] > kEps && dist[rows + c] < inf && (sink < 0 || dist[rows + c] < dist[static_cast<std::size_t>(sink)])) {
        sink = static_cast<std::ptrdiff_t>(rows + c);
      }
    }
    if (sink < 0) break;

    // bottleneck along the path
    double amount = need[static_cast<std::size_t>(sink) - rows];
    std::size_t node = static_cast<std::size_t>(sink);
    while (pred[node] >= 0) {
      const auto prev = static_cast<std::size_t>(pred[node]);
      if (node < rows) amount = std::min(amount, plan.flow[node * cols + (prev - rows)]);  // backward edge
      node = prev;
    }
    amount = std::min(amount, left[node]);
    const std::size_t source = node;

    node = static_cast<std::size_t>(sink);
    while (pred[node] >= 0) {
      const auto prev = static_cast<std::size_t>(pred[node]);
      if (node >= rows)
        plan.flow[prev * cols + (node - rows)] += amount;
      else
        plan.flow[node * cols + (prev - rows)] -= amount;
      node = prev;
    }
    left[source] -= amount;
    need[static_cast<std::size_t>(sink) - rows] -= amount;
  }

  // residual supply (from rounding) goes to the cheapest column of its row
  for (std::size_t r = 0; r < rows; ++r) {
    if (left[r] > 0.0) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < cols; ++c)
        if (cost[r * cols + c] < cost[r * cols + best]) best = c;
      plan.flow[r * cols + best] += left[r];
    }
  }
  for (auto& f : plan.flow) f = std::max(f, 0.0);
  for (std::size_t i = 0; i < plan.flow.size(); ++i) plan.cost += plan.flow[i] * cost[i];
  return plan;
}

}  // namespace rdp
