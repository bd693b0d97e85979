#pragma once

#include "oscan/core/point_cloud.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

namespace oscan {

inline constexpr double kTauCeiling = 0.999;

/// Cost of a traverse of length `distance` into a site of guidance `tau`:
/// d / (1 − min(τ, 0.999)). High-τ destinations are cheaper.
inline double edge_objective(double distance, double tau) {
  if (distance < 0.0) throw InvalidArgument("edge_objective: negative distance");
  return distance / (1.0 - std::min(std::max(tau, 0.0), kTauCeiling));
}

/// Square cost matrix; row/column 0 is the fixed start, 1..n are the sites.
using CostMatrix = std::vector<std::vector<double>>;

/// Objective matrix from pairwise distances (same layout) and site τ values,
/// where entering site j costs edge_objective(d(i, j), τ_j).
inline CostMatrix objective_matrix(const CostMatrix& distance, const std::vector<double>& site_tau) {
  const std::size_t m = distance.size();
  if (site_tau.size() + 1 != m) throw InvalidArgument("objective_matrix: size mismatch");
  CostMatrix out(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 1; j < m; ++j)
      if (i != j) out[i][j] = edge_objective(distance[i][j], site_tau[j - 1]);
  return out;
}

struct TspTour {
  std::vector<std::size_t> order;  // site indices, 0-based (matrix row k + 1)
  double cost = 0.0;
};

inline double open_path_cost(const CostMatrix& cost, const std::vector<std::size_t>& order) {
  double c = 0.0;
  std::size_t at = 0;
  for (auto s : order) {
    c += cost[at][s + 1];
    at = s + 1;
  }
  return c;
}

inline constexpr std::size_t kTspExactLimit = 12;
inline constexpr std::size_t kTspHardCap = 30;

namespace detail {

inline TspTour tsp_exact(const CostMatrix& cost, std::size_t n) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t full = std::size_t{1} << n;
  std::vector<double> dp(full * n, inf);
  std::vector<std::uint8_t> prev(full * n, 0xFF);
  for (std::size_t j = 0; j < n; ++j) dp[(std::size_t{1} << j) * n + j] = cost[0][j + 1];
  for (std::size_t mask = 1; mask < full; ++mask)
    for (std::size_t j = 0; j < n; ++j) {
      const double base = dp[mask * n + j];
      if (!(mask >> j & 1) || base == inf) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (mask >> k & 1) continue;
        const std::size_t next = mask | (std::size_t{1} << k);
        const double c = base + cost[j + 1][k + 1];
        if (c < dp[next * n + k]) {
          dp[next * n + k] = c;
          prev[next * n + k] = static_cast<std::uint8_t>(j);
        }
      }
    }
  TspTour t;
  std::size_t last = 0;
  double best = inf;
  for (std::size_t j = 0; j < n; ++j)
    if (dp[(full - 1) * n + j] < best) {
      best = dp[(full - 1) * n + j];
      last = j;
    }
  std::size_t mask = full - 1;
  while (true) {
    t.order.push_back(last);
    const auto p = prev[mask * n + last];
    mask &= ~(std::size_t{1} << last);
    if (p == 0xFF) break;
    last = p;
  }
  std::reverse(t.order.begin(), t.order.end());
  t.cost = open_path_cost(cost, t.order);
  return t;
}

inline TspTour tsp_heuristic(const CostMatrix& cost, std::size_t n) {
  TspTour t;
  std::vector<bool> used(n, false);
  std::size_t at = 0;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t best = n;
    for (std::size_t k = 0; k < n; ++k)
      if (!used[k] && (best == n || cost[at][k + 1] < cost[at][best + 1])) best = k;
    used[best] = true;
    t.order.push_back(best);
    at = best + 1;
  }
  // 2-opt on the open path. The matrix may be asymmetric, so every candidate
  // reversal is re-costed in full.
  double current = open_path_cost(cost, t.order);
  for (bool improved = true; improved;) {
    improved = false;
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        std::reverse(t.order.begin() + i, t.order.begin() + j + 1);
        const double c = open_path_cost(cost, t.order);
        if (c < current - 1e-12) {
          current = c;
          improved = true;
        } else {
          std::reverse(t.order.begin() + i, t.order.begin() + j + 1);
        }
      }
  }
  t.cost = current;
  return t;
}

}  // namespace detail

/// Open-path visiting order from the start (row 0) through every site.
/// Exact subset dynamic programming up to 12 sites, nearest neighbor plus
/// 2-opt above that. More than 30 sites is a planner error.
inline TspTour tsp_order(const CostMatrix& cost) {
  const std::size_t m = cost.size();
  for (const auto& row : cost)
    if (row.size() != m) throw InvalidArgument("tsp_order: cost matrix must be square");
  if (m < 2) return {};
  const std::size_t n = m - 1;
  if (n > kTspHardCap) throw PlannerError("tsp_order: too many sites");
  return n <= kTspExactLimit ? detail::tsp_exact(cost, n) : detail::tsp_heuristic(cost, n);
}

}  // namespace oscan
