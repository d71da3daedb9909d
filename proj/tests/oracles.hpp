#pragma once

// Independent reference implementations used only by the tests. Nothing
// here calls into the library's transport or shortest-path code.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

// Dense two-phase tableau simplex:
//   minimize c.x  subject to  A x = b,  x >= 0.
inline double lp_minimize(const std::vector<double>& c, Matrix A, std::vector<double> b) {
  const std::size_t m = A.size();
  const std::size_t n = c.size();
  const double tol = 1e-12;
  for (std::size_t i = 0; i < m; ++i)
    if (b[i] < 0) {
      for (double& a : A[i]) a = -a;
      b[i] = -b[i];
    }
  // Columns: n structural, m artificial, then rhs.
  const std::size_t cols = n + m + 1;
  Matrix T(m, std::vector<double>(cols, 0.0));
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) T[i][j] = A[i][j];
    T[i][n + i] = 1.0;
    T[i][cols - 1] = b[i];
    basis[i] = n + i;
  }

  auto pivot = [&](std::size_t r, std::size_t e) {
    const double p = T[r][e];
    for (double& v : T[r]) v /= p;
    for (std::size_t i = 0; i < m; ++i)
      if (i != r && T[i][e] != 0.0) {
        const double f = T[i][e];
        for (std::size_t j = 0; j < cols; ++j) T[i][j] -= f * T[r][j];
      }
    basis[r] = e;
  };

  // Runs the simplex on objective `obj` (length n+m), allowing columns < limit
  // to enter. Dantzig pricing; Bland's rule after a run of degenerate pivots.
  auto solve = [&](const std::vector<double>& obj, std::size_t limit) {
    int degenerate_run = 0;
    for (int guard = 0; guard < 1000000; ++guard) {
      const bool bland = degenerate_run > 50;
      std::size_t enter = cols;
      double most_negative = -tol;
      for (std::size_t j = 0; j < limit; ++j) {
        double reduced = obj[j];
        for (std::size_t i = 0; i < m; ++i) reduced -= obj[basis[i]] * T[i][j];
        if (reduced < most_negative) {
          enter = j;
          if (bland) break;
          most_negative = reduced;
        }
      }
      if (enter == cols) return;
      std::size_t leave = m;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m; ++i) {
        if (T[i][enter] <= tol) continue;
        const double ratio = T[i][cols - 1] / T[i][enter];
        const bool tie = leave < m && std::abs(ratio - best) <= tol;
        if (leave == m || ratio < best - tol || (tie && basis[i] < basis[leave])) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
      if (leave == m) throw std::runtime_error("LP unbounded");
      degenerate_run = best <= tol ? degenerate_run + 1 : 0;
      pivot(leave, enter);
    }
    throw std::runtime_error("LP did not terminate");
  };

  std::vector<double> phase1(n + m, 0.0);
  for (std::size_t i = 0; i < m; ++i) phase1[n + i] = 1.0;
  solve(phase1, n + m);
  double infeasibility = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] >= n) infeasibility += T[i][cols - 1];
  if (infeasibility > 1e-9) throw std::runtime_error("LP infeasible");
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] >= n)
      for (std::size_t j = 0; j < n; ++j)
        if (std::abs(T[i][j]) > 1e-9) {
          pivot(i, j);
          break;
        }

  std::vector<double> phase2(n + m, 0.0);
  std::copy(c.begin(), c.end(), phase2.begin());
  solve(phase2, n);
  double value = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] < n) value += c[basis[i]] * T[i][cols - 1];
  return value;
}

// Transport LP over every plan entry.
inline double lp_transport(const std::vector<double>& supply, const std::vector<double>& demand,
                           const Matrix& cost) {
  const std::size_t m = supply.size(), n = demand.size();
  std::vector<double> c(m * n);
  Matrix A(m + n, std::vector<double>(m * n, 0.0));
  std::vector<double> b(m + n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      c[i * n + j] = cost[i][j];
      A[i][i * n + j] = 1.0;
      A[m + j][i * n + j] = 1.0;
    }
  for (std::size_t i = 0; i < m; ++i) b[i] = supply[i];
  for (std::size_t j = 0; j < n; ++j) b[m + j] = demand[j];
  return lp_minimize(c, A, b);
}

struct WEdge {
  std::size_t u, v;
  double w;
};

inline Matrix floyd_warshall(std::size_t n, const std::vector<WEdge>& edges) {
  const double inf = std::numeric_limits<double>::infinity();
  Matrix d(n, std::vector<double>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  for (const auto& e : edges) {
    d[e.u][e.v] = std::min(d[e.u][e.v], e.w);
    d[e.v][e.u] = std::min(d[e.v][e.u], e.w);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

// Curvature of each listed edge: full n x n transport LP between the lazy
// uniform neighbour measures, ground metric from Floyd-Warshall.
inline std::vector<double> brute_force_orc(std::size_t n, const std::vector<WEdge>& edges, double alpha) {
  const Matrix d = floyd_warshall(n, edges);
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  auto measure = [&](std::size_t x) {
    std::vector<double> m(n, 0.0);
    m[x] += alpha;
    for (std::size_t y : adj[x]) m[y] += (1.0 - alpha) / static_cast<double>(adj[x].size());
    return m;
  };
  std::vector<double> out;
  for (const auto& e : edges) out.push_back(1.0 - lp_transport(measure(e.u), measure(e.v), d) / d[e.u][e.v]);
  return out;
}

// Random connected graph: a random spanning tree plus extra edges, each pair
// u < v at most once, listed in (u, v) order.
inline std::vector<WEdge> random_connected_graph(std::mt19937_64& rng, std::size_t n, double extra_p,
                                                 double w_lo = 0.2, double w_hi = 3.0) {
  std::uniform_real_distribution<double> weight(w_lo, w_hi), coin(0.0, 1.0);
  std::vector<std::vector<bool>> has(n, std::vector<bool>(n, false));
  for (std::size_t v = 1; v < n; ++v) {
    const std::size_t u = std::uniform_int_distribution<std::size_t>(0, v - 1)(rng);
    has[u][v] = true;
  }
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (coin(rng) < extra_p) has[u][v] = true;
  std::vector<WEdge> edges;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (has[u][v]) edges.push_back({u, v, weight(rng)});
  return edges;
}

// W1 between two empirical samples as a transport LP with |x - y| cost.
inline double lp_w1_samples(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> sa(a.size(), 1.0 / static_cast<double>(a.size()));
  std::vector<double> sb(b.size(), 1.0 / static_cast<double>(b.size()));
  Matrix cost(a.size(), std::vector<double>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) cost[i][j] = std::abs(a[i] - b[j]);
  return lp_transport(sa, sb, cost);
}

}  // namespace oracle
