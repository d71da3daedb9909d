#pragma once

// Exact discrete optimal transport between two finite measures.
//
// Successive shortest augmenting paths on the bipartite transport network
// with Johnson potentials, so each search is a dense Dijkstra. Problems
// here have at most a few dozen atoms per side.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "curvalign/error.hpp"

namespace curvalign {

struct TransportPlan {
  double cost = 0.0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> flow;  // rows x cols, row-major

  double at(std::size_t i, std::size_t j) const { return flow[i * cols + j]; }
};

// `cost` is row-major supply.size() x demand.size(), nonnegative.
inline TransportPlan min_cost_transport(std::span<const double> supply,
                                        std::span<const double> demand,
                                        std::span<const double> cost) {
  const std::size_t m = supply.size();
  const std::size_t n = demand.size();
  if (cost.size() != m * n) throw InfeasibleTransport("cost matrix has the wrong shape");
  const double total_supply = std::accumulate(supply.begin(), supply.end(), 0.0);
  const double total_demand = std::accumulate(demand.begin(), demand.end(), 0.0);
  if (std::abs(total_supply - total_demand) > 1e-9)
    throw InfeasibleTransport("mass mismatch: supply " + std::to_string(total_supply) +
                              " vs demand " + std::to_string(total_demand));
  for (double s : supply)
    if (!(s >= 0.0)) throw InfeasibleTransport("negative supply");
  for (double d : demand)
    if (!(d >= 0.0)) throw InfeasibleTransport("negative demand");
  for (double c : cost)
    if (!(c >= 0.0) || !std::isfinite(c)) throw InfeasibleTransport("costs must be finite and >= 0");

  TransportPlan plan{0.0, m, n, std::vector<double>(m * n, 0.0)};
  if (m == 0 || n == 0) return plan;

  // Residual masses below this are treated as exhausted.
  const double eps = 1e-13 * std::max(1.0, total_supply);
  std::vector<double> supply_left(supply.begin(), supply.end());
  std::vector<double> demand_left(demand.begin(), demand.end());

  // Vertex layout: [0, m) sources, [m, m+n) sinks, then super sink and
  // super source.
  const std::size_t V = m + n + 2;
  const std::size_t sink = m + n;
  const std::size_t root = m + n + 1;
  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<double> potential(V, 0.0), dist(V);
  std::vector<std::size_t> parent(V);
  std::vector<char> done(V);

  auto relax = [&](std::size_t from, std::size_t to, double c) {
    const double reduced = std::max(0.0, c + potential[from] - potential[to]);
    const double cand = dist[from] + reduced;
    if (cand < dist[to]) {
      dist[to] = cand;
      parent[to] = from;
    }
  };

  for (std::size_t guard = 0;; ++guard) {
    double remaining = 0.0;
    for (double s : supply_left) remaining += s;
    if (remaining <= eps) break;
    if (guard > 4 * (m + n) * (m + n) + 16)
      throw InfeasibleTransport("augmenting path search did not terminate");

    std::fill(dist.begin(), dist.end(), inf);
    std::fill(parent.begin(), parent.end(), none);
    std::fill(done.begin(), done.end(), 0);
    dist[root] = 0.0;

    for (;;) {
      std::size_t u = none;
      double best = inf;
      for (std::size_t v = 0; v < V; ++v)
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = v;
        }
      if (u == none || u == sink) break;
      done[u] = 1;
      if (u == root) {
        for (std::size_t i = 0; i < m; ++i)
          if (supply_left[i] > eps) relax(root, i, 0.0);
      } else if (u < m) {
        for (std::size_t j = 0; j < n; ++j)
          if (!done[m + j]) relax(u, m + j, cost[u * n + j]);
      } else {
        const std::size_t j = u - m;
        for (std::size_t i = 0; i < m; ++i)
          if (!done[i] && plan.flow[i * n + j] > eps) relax(u, i, -cost[i * n + j]);
        if (demand_left[j] > eps) relax(u, sink, 0.0);
      }
    }
    if (!std::isfinite(dist[sink])) {
      if (remaining <= 1e-9) break;  // rounding crumbs inside the tolerance
      throw InfeasibleTransport("no augmenting path with supply left");
    }

    // Capped potential update keeps every residual reduced cost nonnegative.
    const double cap = dist[sink];
    for (std::size_t v = 0; v < V; ++v) potential[v] += std::min(dist[v], cap);

    // Path: root -> source -> sink (-> source -> sink)* -> super sink.
    const std::size_t last = parent[sink];
    double push = demand_left[last - m];
    std::size_t first = none;
    for (std::size_t v = last; v != root; v = parent[v]) {
      const std::size_t u = parent[v];
      if (u == root) {
        first = v;
      } else if (u >= m) {
        push = std::min(push, plan.flow[v * n + (u - m)]);  // backward arc
      }
    }
    push = std::min(push, supply_left[first]);

    demand_left[last - m] -= push;
    supply_left[first] -= push;
    for (std::size_t v = last; parent[v] != root; v = parent[v]) {
      const std::size_t u = parent[v];
      if (u < m)
        plan.flow[u * n + (v - m)] += push;
      else
        plan.flow[v * n + (u - m)] = std::max(0.0, plan.flow[v * n + (u - m)] - push);
    }
  }

  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) plan.cost += plan.flow[i * n + j] * cost[i * n + j];
  return plan;
}

}  // namespace curvalign
