#pragma once

// Ollivier-Ricci curvature of graph edges:
//
//   kappa(x, y) = 1 - W1(m_x, m_y) / d(x, y)
//
// m_x keeps mass alpha at x and spreads 1 - alpha uniformly over the
// neighbours of x. W1 is solved exactly over the weighted shortest-path
// ground metric of the graph.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "curvalign/error.hpp"
#include "curvalign/graph.hpp"
#include "curvalign/report.hpp"
#include "curvalign/transport.hpp"

namespace curvalign {

inline constexpr double kDefaultAlpha = 0.5;
inline constexpr const char* kTransportBackend = "exact-ssp-min-cost-flow";

struct Atom {
  std::size_t node = 0;
  double mass = 0.0;
};

struct NeighborMeasure {
  std::size_t center = 0;
  std::vector<Atom> atoms;  // center first, then neighbours by index
  double alpha = kDefaultAlpha;
};

inline void validate_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in [0, 1)");
}

inline NeighborMeasure neighbor_measure(const WeightedGraph& g, std::size_t x, double alpha) {
  validate_alpha(alpha);
  if (x >= g.num_nodes()) throw ValidationError("node " + std::to_string(x) + " not in graph");
  const std::size_t deg = g.degree(x);
  if (deg == 0) throw IsolatedNode("node '" + g.nodes()[x] + "' has no neighbours");
  NeighborMeasure m{x, {}, alpha};
  if (alpha > 0.0) m.atoms.push_back({x, alpha});
  const double share = (1.0 - alpha) / static_cast<double>(deg);
  for (const auto& nb : g.neighbors(x)) m.atoms.push_back({nb.node, share});
  return m;
}

// Exact W1 between two atom sets under an arbitrary nonnegative ground cost.
inline double wasserstein_graph(const NeighborMeasure& mu, const NeighborMeasure& nu,
                                const Eigen::MatrixXd& ground) {
  std::vector<double> supply, demand, cost;
  for (const auto& a : mu.atoms) supply.push_back(a.mass);
  for (const auto& b : nu.atoms) demand.push_back(b.mass);
  for (const auto& a : mu.atoms)
    for (const auto& b : nu.atoms) {
      if (static_cast<Eigen::Index>(std::max(a.node, b.node)) >= ground.rows())
        throw ValidationError("ground metric does not cover every atom");
      cost.push_back(ground(static_cast<Eigen::Index>(a.node), static_cast<Eigen::Index>(b.node)));
    }
  return min_cost_transport(supply, demand, cost).cost;
}

namespace detail {

// W1 under a metric ground cost. Mass shared by both measures at the same
// node stays put, so only the signed difference has to be transported.
inline double wasserstein_metric(const NeighborMeasure& mu, const NeighborMeasure& nu,
                                 const Eigen::MatrixXd& ground) {
  std::vector<std::pair<std::size_t, double>> net;
  net.reserve(mu.atoms.size() + nu.atoms.size());
  for (const auto& a : mu.atoms) net.emplace_back(a.node, a.mass);
  for (const auto& b : nu.atoms) net.emplace_back(b.node, -b.mass);
  std::sort(net.begin(), net.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::size_t> src_nodes, dst_nodes;
  std::vector<double> supply, demand;
  for (std::size_t i = 0; i < net.size();) {
    std::size_t j = i;
    double balance = 0.0;
    for (; j < net.size() && net[j].first == net[i].first; ++j) balance += net[j].second;
    if (balance > 0.0) {
      src_nodes.push_back(net[i].first);
      supply.push_back(balance);
    } else if (balance < 0.0) {
      dst_nodes.push_back(net[i].first);
      demand.push_back(-balance);
    }
    i = j;
  }
  std::vector<double> cost;
  cost.reserve(src_nodes.size() * dst_nodes.size());
  for (std::size_t a : src_nodes)
    for (std::size_t b : dst_nodes)
      cost.push_back(ground(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
  return min_cost_transport(supply, demand, cost).cost;
}

// Rounds to a multiple of 2^-40 so that edges related by a graph automorphism
// get bit-identical values despite different summation orders.
inline double snap_curvature(double kappa) { return std::ldexp(std::nearbyint(std::ldexp(kappa, 40)), -40); }

}  // namespace detail

// `ground` must be the shortest-path metric of g (or any metric).
inline double orc_edge(const WeightedGraph& g, std::size_t x, std::size_t y, double alpha,
                       const Eigen::MatrixXd& ground) {
  if (!g.find_edge(x, y))
    throw ValidationError("(" + std::to_string(x) + "," + std::to_string(y) + ") is not an edge");
  const double d = ground(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
  if (!(d > 0.0)) throw DegenerateInput("zero ground distance along an edge");
  const auto mx = neighbor_measure(g, x, alpha);
  const auto my = neighbor_measure(g, y, alpha);
  return detail::snap_curvature(1.0 - detail::wasserstein_metric(mx, my, ground) / d);
}

struct EdgeCurvature {
  std::size_t u = 0;
  std::size_t v = 0;
  double kappa = 0.0;
};

struct CurvatureMap {
  double alpha = kDefaultAlpha;
  std::string backend = kTransportBackend;
  std::vector<EdgeCurvature> edges;  // sorted by (u, v), aligned with the graph's edges

  std::vector<double> values() const {
    std::vector<double> k(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) k[i] = edges[i].kappa;
    return k;
  }
};

// Curvature of every edge against an explicit weight vector.
inline CurvatureMap orc_all(const WeightedGraph& g, std::span<const double> weights, double alpha,
                            const Eigen::MatrixXd* ground_in = nullptr) {
  validate_alpha(alpha);
  require_connected(g);
  Eigen::MatrixXd computed;
  if (!ground_in) computed = shortest_path_values(g, weights);
  const Eigen::MatrixXd& ground = ground_in ? *ground_in : computed;

  std::vector<NeighborMeasure> measures;
  measures.reserve(g.num_nodes());
  for (std::size_t x = 0; x < g.num_nodes(); ++x) measures.push_back(neighbor_measure(g, x, alpha));

  CurvatureMap out{alpha, kTransportBackend, {}};
  out.edges.reserve(g.num_edges());
  for (const auto& e : g.edges()) {
    const double d = ground(static_cast<Eigen::Index>(e.u), static_cast<Eigen::Index>(e.v));
    const double w = detail::wasserstein_metric(measures[e.u], measures[e.v], ground);
    out.edges.push_back({e.u, e.v, detail::snap_curvature(1.0 - w / d)});
  }
  return out;
}

inline CurvatureMap orc_all(const WeightedGraph& g, double alpha = kDefaultAlpha) {
  const auto w = g.weights();
  return orc_all(g, w, alpha);
}

inline Json curvature_to_json(const CurvatureMap& c) {
  Json edges = Json::array();
  for (const auto& e : c.edges) edges.push_back({{"u", e.u}, {"v", e.v}, {"kappa", e.kappa}});
  return {{"alpha", c.alpha}, {"backend", c.backend}, {"edges", std::move(edges)}};
}

inline CurvatureMap curvature_from_json(const Json& j) {
  try {
    CurvatureMap c;
    c.alpha = j.at("alpha").get<double>();
    c.backend = j.value("backend", std::string(kTransportBackend));
    for (const auto& e : j.at("edges"))
      c.edges.push_back({e.at("u").get<std::size_t>(), e.at("v").get<std::size_t>(),
                         e.at("kappa").get<double>()});
    return c;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("curvature JSON: ") + e.what());
  }
}

}  // namespace curvalign
