#pragma once

// Distances between graphs and between curvature distributions.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "curvalign/curvature.hpp"
#include "curvalign/error.hpp"
#include "curvalign/graph.hpp"
#include "curvalign/random.hpp"
#include "curvalign/report.hpp"

namespace curvalign {

// ---------------------------------------------------------------------------
// Heat diffusion distance  d(G1, G2; t) = || exp(-t L1) - exp(-t L2) ||_F^2

enum class WeightChannel { Unit, ConstructionWeights, FlowWeights };

inline std::string to_string(WeightChannel c) {
  switch (c) {
    case WeightChannel::Unit: return "unit";
    case WeightChannel::ConstructionWeights: return "construction";
    case WeightChannel::FlowWeights: return "flow";
  }
  return "unknown";
}

inline WeightChannel parse_weight_channel(std::string_view s) {
  if (s == "unit") return WeightChannel::Unit;
  if (s == "construction") return WeightChannel::ConstructionWeights;
  if (s == "flow") return WeightChannel::FlowWeights;
  throw ValidationError("unknown weight channel '" + std::string(s) + "'");
}

struct LaplacianSpec {
  WeightChannel channel = WeightChannel::ConstructionWeights;
};

// A graph plus, optionally, its post-flow weights.
struct HeatOperand {
  const WeightedGraph& graph;
  std::span<const double> flow_weights = {};
};

// Combinatorial Laplacian D - W.
inline Eigen::MatrixXd laplacian(const WeightedGraph& g, std::span<const double> weights) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < g.num_edges(); ++i) {
    const auto u = static_cast<Eigen::Index>(g.edges()[i].u);
    const auto v = static_cast<Eigen::Index>(g.edges()[i].v);
    l(u, v) -= weights[i];
    l(v, u) -= weights[i];
    l(u, u) += weights[i];
    l(v, v) += weights[i];
  }
  return l;
}

inline Eigen::MatrixXd laplacian(const HeatOperand& op, WeightChannel channel) {
  switch (channel) {
    case WeightChannel::Unit: {
      const std::vector<double> ones(op.graph.num_edges(), 1.0);
      return laplacian(op.graph, ones);
    }
    case WeightChannel::ConstructionWeights: return laplacian(op.graph, op.graph.weights());
    case WeightChannel::FlowWeights:
      if (op.flow_weights.size() != op.graph.num_edges())
        throw ChannelUnavailable("flow weights not available for this graph");
      return laplacian(op.graph, op.flow_weights);
  }
  throw ValidationError("unknown weight channel");
}

// 20 log-spaced times from 1e-2 to 1e1.
inline std::vector<double> default_t_grid() {
  std::vector<double> t(20);
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = std::pow(10.0, -2.0 + 3.0 * static_cast<double>(i) / 19.0);
  return t;
}

struct HeatDistance {
  double value = 0.0;  // max over the grid
  double t_star = 0.0;
  std::vector<double> per_t;
};

// Heat kernels come from the eigendecomposition of the symmetric Laplacians.
inline HeatDistance heat_distance(const Eigen::MatrixXd& l1, const Eigen::MatrixXd& l2,
                                  std::span<const double> t_grid) {
  if (l1.rows() != l2.rows() || l1.cols() != l2.cols())
    throw NodeSetMismatch("Laplacians differ in size");
  if (t_grid.empty()) throw ValidationError("t grid is empty");
  for (double t : t_grid)
    if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError("t values must be positive and finite");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(l1), e2(l2);
  if (e1.info() != Eigen::Success || e2.info() != Eigen::Success)
    throw NonFiniteExponential("Laplacian eigendecomposition failed");
  const bool same = l1 == l2;
  HeatDistance out;
  out.value = -1.0;
  for (double t : t_grid) {
    double d = 0.0;
    if (!same) {
      const Eigen::MatrixXd h1 =
          e1.eigenvectors() * (-t * e1.eigenvalues().array()).exp().matrix().asDiagonal() *
          e1.eigenvectors().transpose();
      const Eigen::MatrixXd h2 =
          e2.eigenvectors() * (-t * e2.eigenvalues().array()).exp().matrix().asDiagonal() *
          e2.eigenvectors().transpose();
      if (!h1.allFinite() || !h2.allFinite())
        throw NonFiniteExponential("heat kernel is not finite at t=" + format_number(t));
      d = (h1 - h2).squaredNorm();
    }
    out.per_t.push_back(d);
    if (d > out.value) {
      out.value = d;
      out.t_star = t;
    }
  }
  return out;
}

inline HeatDistance heat_distance(const HeatOperand& a, const HeatOperand& b,
                                  const LaplacianSpec& spec, std::span<const double> t_grid) {
  if (a.graph.nodes() != b.graph.nodes())
    throw NodeSetMismatch("graphs must share the same node ids in the same order");
  return heat_distance(laplacian(a, spec.channel), laplacian(b, spec.channel), t_grid);
}

// ---------------------------------------------------------------------------
// Curvature distributions

// W1 between two empirical distributions: integral of |F_a - F_b|.
inline double wasserstein_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw EmptyCurvatureMap("W1 needs two nonempty samples");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double x = std::min(sa.front(), sb.front());
  double total = 0.0;
  while (i < sa.size() || j < sb.size()) {
    // Advance past every sample equal to the current abscissa.
    while (i < sa.size() && sa[i] <= x) ++i;
    while (j < sb.size() && sb[j] <= x) ++j;
    if (i == sa.size() && j == sb.size()) break;
    double next = std::numeric_limits<double>::infinity();
    if (i < sa.size()) next = std::min(next, sa[i]);
    if (j < sb.size()) next = std::min(next, sb[j]);
    total += (next - x) * std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb);
    x = next;
  }
  return total;
}

inline double curvature_w1(const CurvatureMap& c1, const CurvatureMap& c2) {
  if (c1.edges.empty() || c2.edges.empty()) throw EmptyCurvatureMap("curvature map is empty");
  return wasserstein_1d(c1.values(), c2.values());
}

// KL(P || Q) of Laplace-smoothed histograms over the joint range.
inline double histogram_kld(std::span<const double> a, std::span<const double> b, std::size_t bins) {
  if (a.empty() || b.empty()) throw EmptyCurvatureMap("KLD needs two nonempty samples");
  if (bins < 2) throw ValidationError("KLD needs at least 2 bins");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : a) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : b) lo = std::min(lo, v), hi = std::max(hi, v);
  const double width = (hi - lo) / static_cast<double>(bins);
  auto histogram = [&](std::span<const double> s) {
    std::vector<double> h(bins, 1.0);
    for (double v : s) {
      std::size_t k = width > 0.0 ? static_cast<std::size_t>((v - lo) / width) : 0;
      h[std::min(k, bins - 1)] += 1.0;
    }
    const double total = static_cast<double>(s.size() + bins);
    for (double& x : h) x /= total;
    return h;
  };
  const auto p = histogram(a);
  const auto q = histogram(b);
  double kl = 0.0;
  for (std::size_t k = 0; k < bins; ++k) kl += p[k] * std::log(p[k] / q[k]);
  return std::max(0.0, kl);
}

inline double curvature_kld(const CurvatureMap& c1, const CurvatureMap& c2, std::size_t bins = 20) {
  if (c1.edges.empty() || c2.edges.empty()) throw EmptyCurvatureMap("curvature map is empty");
  return histogram_kld(c1.values(), c2.values(), bins);
}

// ---------------------------------------------------------------------------
// Repeated random-subset evaluation

struct SubsampleResult {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t n_iter = 0;
  std::size_t n_subset = 0;
  std::uint64_t seed = 0;
  std::size_t redraws = 0;
  std::vector<double> values;
};

using SubsetClosure = std::function<double(const std::vector<std::size_t>&)>;

// Each iteration draws from its own stream child_seed(seed, iteration), so
// results do not depend on evaluation order. A closure that throws a
// library Error (e.g. a disconnected subset graph) triggers a redraw.
inline SubsampleResult subsample_protocol(const SubsetClosure& closure, std::size_t n_total,
                                          std::size_t n_subset, std::size_t n_iter,
                                          std::uint64_t seed, std::size_t max_redraws = 0) {
  if (n_subset < 1 || n_subset > n_total) throw ValidationError("need 1 <= n_subset <= N");
  if (n_iter < 1) throw ValidationError("need at least one iteration");
  if (max_redraws == 0) max_redraws = 10 * n_iter;
  SubsampleResult out{0.0, 0.0, n_iter, n_subset, seed, 0, {}};
  double m2 = 0.0;
  for (std::size_t it = 0; it < n_iter; ++it) {
    for (std::size_t attempt = 0;; ++attempt) {
      Rng rng(child_seed(child_seed(seed, it), attempt));
      const auto subset = sample_without_replacement(rng, n_total, n_subset);
      try {
        const double x = closure(subset);
        out.values.push_back(x);
        // Welford update: exact for constant closures.
        const double delta = x - out.mean;
        out.mean += delta / static_cast<double>(out.values.size());
        m2 += delta * (x - out.mean);
        break;
      } catch (const Error& e) {
        if (++out.redraws > max_redraws)
          throw SubsetTooSmall("too many failed subset draws; last error: " + std::string(e.what()));
      }
    }
  }
  out.std = std::sqrt(m2 / static_cast<double>(n_iter));
  return out;
}

inline Json subsample_to_json(const SubsampleResult& r) {
  return {{"mean", r.mean}, {"std", r.std},         {"n_iter", r.n_iter},
          {"n_subset", r.n_subset}, {"seed", r.seed}, {"redraws", r.redraws}};
}

}  // namespace curvalign
