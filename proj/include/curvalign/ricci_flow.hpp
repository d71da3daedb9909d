#pragma once

// Discrete Ricci flow on edge weights,
//
//   w^{i+1}(x, y) = d^i(x, y) - kappa^i(x, y) * d^i(x, y),
//
// with every weight updated from the same frozen iterate. Also the
// flow-metric, community detection by cutting heavy post-flow edges and
// the usual community quality scores.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "curvalign/curvature.hpp"
#include "curvalign/error.hpp"
#include "curvalign/graph.hpp"
#include "curvalign/report.hpp"

namespace curvalign {

struct FlowOptions {
  std::size_t iterations = 30;
  double alpha = kDefaultAlpha;
  bool normalize = false;       // rescale so total weight stays |E|
  double weight_floor = 1e-8;   // weights at or below zero are clamped here
};

struct FlowSummary {
  std::size_t iteration = 0;
  double weight_min = 0, weight_mean = 0, weight_max = 0;
  double kappa_min = 0, kappa_mean = 0, kappa_max = 0;
};

struct FlowState {
  std::size_t iteration = 0;
  std::vector<double> weights;     // w^iteration, indexed like g.edges()
  std::vector<double> curvatures;  // kappa^{iteration-1}; empty before the first step
  std::vector<FlowSummary> history;
  std::size_t floor_events = 0;    // number of weight clamps so far
};

inline FlowState initial_flow_state(const WeightedGraph& g) {
  return {0, std::vector<double>(g.num_edges(), 1.0), {}, {}, 0};
}

namespace detail {

inline void min_mean_max(std::span<const double> v, double& lo, double& mean, double& hi) {
  lo = *std::min_element(v.begin(), v.end());
  hi = *std::max_element(v.begin(), v.end());
  mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace detail

inline FlowState flow_step(const WeightedGraph& g, const FlowState& state,
                           const FlowOptions& options = {}) {
  if (state.weights.size() != g.num_edges())
    throw ValidationError("flow state does not match the graph's edge count");
  if (g.num_edges() == 0) throw ValidationError("flow needs at least one edge");
  for (double w : state.weights)
    if (!std::isfinite(w)) throw FlowDiverged("non-finite weight before step");
    else if (!(w > 0.0)) throw ValidationError("flow weights must be positive");

  const Eigen::MatrixXd ground = shortest_path_values(g, state.weights);
  const CurvatureMap kappa = orc_all(g, state.weights, options.alpha, &ground);

  FlowState next;
  next.iteration = state.iteration + 1;
  next.floor_events = state.floor_events;
  next.curvatures = kappa.values();
  next.weights.resize(g.num_edges());
  for (std::size_t i = 0; i < g.num_edges(); ++i) {
    const auto& e = g.edges()[i];
    const double d = ground(static_cast<Eigen::Index>(e.u), static_cast<Eigen::Index>(e.v));
    double w = d - next.curvatures[i] * d;
    if (!std::isfinite(w)) throw FlowDiverged("weight of edge " + std::to_string(i) + " is not finite");
    if (w <= options.weight_floor) {
      w = options.weight_floor;
      ++next.floor_events;
    }
    next.weights[i] = w;
  }
  if (options.normalize) {
    const double total = std::accumulate(next.weights.begin(), next.weights.end(), 0.0);
    const double scale = static_cast<double>(g.num_edges()) / total;
    for (double& w : next.weights) w = std::max(w * scale, options.weight_floor);
  }

  next.history = state.history;
  FlowSummary s;
  s.iteration = state.iteration;
  detail::min_mean_max(state.weights, s.weight_min, s.weight_mean, s.weight_max);
  detail::min_mean_max(next.curvatures, s.kappa_min, s.kappa_mean, s.kappa_max);
  next.history.push_back(s);
  return next;
}

// Starts from unit weights regardless of the construction weights.
inline FlowState run_flow(const WeightedGraph& g, const FlowOptions& options = {}) {
  validate_alpha(options.alpha);
  require_connected(g);
  FlowState state = initial_flow_state(g);
  for (std::size_t i = 0; i < options.iterations; ++i) state = flow_step(g, state, options);
  return state;
}

// Weighted shortest paths under the final flow weights.
inline DistanceMatrix flow_metric(const FlowState& state, const WeightedGraph& g) {
  return {shortest_path_values(g, state.weights), MetricSpec::flow_metric()};
}

inline Json flow_to_json(const FlowState& state, const WeightedGraph& g) {
  Json history = Json::array();
  for (const auto& h : state.history)
    history.push_back({{"iteration", h.iteration},
                       {"weight", {{"min", h.weight_min}, {"mean", h.weight_mean}, {"max", h.weight_max}}},
                       {"kappa", {{"min", h.kappa_min}, {"mean", h.kappa_mean}, {"max", h.kappa_max}}}});
  Json finals = Json::array();
  for (std::size_t i = 0; i < g.num_edges(); ++i)
    finals.push_back({{"u", g.edges()[i].u}, {"v", g.edges()[i].v}, {"weight", state.weights[i]}});
  return {{"iterations", state.iteration},
          {"floor_events", state.floor_events},
          {"history", std::move(history)},
          {"final_weights", std::move(finals)}};
}

// ---------------------------------------------------------------------------
// Communities

struct ThresholdStrategy {
  enum class Kind { ModularityScan, Fixed } kind = Kind::ModularityScan;
  double value = 0.0;  // used when kind == Fixed

  static ThresholdStrategy modularity_scan() { return {}; }
  static ThresholdStrategy fixed(double t) { return {Kind::Fixed, t}; }
};

struct CommunityAssignment {
  std::vector<std::size_t> labels;  // contiguous from 0, first appearance by node index
  double cut_threshold = 0.0;
  std::size_t n_communities = 0;
  std::string strategy;
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  // The smaller root survives, so labels do not depend on merge order.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

inline std::vector<std::size_t> canonical_labels(std::span<const std::size_t> raw,
                                                 std::size_t* count) {
  std::map<std::size_t, std::size_t> remap;
  std::vector<std::size_t> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto [it, _] = remap.emplace(raw[i], remap.size());
    out[i] = it->second;
  }
  if (count) *count = remap.size();
  return out;
}

}  // namespace detail

// Newman modularity of a partition on the unweighted graph.
inline double modularity(const WeightedGraph& g, std::span<const std::size_t> labels) {
  const double m = static_cast<double>(g.num_edges());
  if (m == 0.0) return 0.0;
  const std::size_t k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<double> internal(k, 0.0), degree(k, 0.0);
  for (const auto& e : g.edges())
    if (labels[e.u] == labels[e.v]) internal[labels[e.u]] += 1.0;
  for (std::size_t x = 0; x < g.num_nodes(); ++x) degree[labels[x]] += static_cast<double>(g.degree(x));
  double q = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double share = degree[c] / (2.0 * m);
    q += internal[c] / m - share * share;
  }
  return q;
}

// Components of the graph after removing edges with weight > threshold.
inline std::vector<std::size_t> cut_components(const WeightedGraph& g,
                                               std::span<const double> weights, double threshold,
                                               std::size_t* count = nullptr) {
  detail::DisjointSets sets(g.num_nodes());
  std::vector<std::size_t> raw(g.num_nodes());
  for (std::size_t i = 0; i < g.num_edges(); ++i) {
    if (weights[i] <= threshold) sets.unite(g.edges()[i].u, g.edges()[i].v);
  }
  for (std::size_t x = 0; x < g.num_nodes(); ++x) raw[x] = sets.find(x);
  return detail::canonical_labels(raw, count);
}

inline CommunityAssignment detect_communities(const WeightedGraph& g, std::span<const double> weights,
                                              const ThresholdStrategy& strategy = {}) {
  if (weights.size() != g.num_edges()) throw ValidationError("weight count does not match edge count");
  CommunityAssignment out;
  if (strategy.kind == ThresholdStrategy::Kind::Fixed) {
    out.cut_threshold = strategy.value;
    out.strategy = "fixed";
    out.labels = cut_components(g, weights, strategy.value, &out.n_communities);
    return out;
  }
  out.strategy = "modularity_scan";
  std::vector<double> candidates(weights.begin(), weights.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  if (candidates.empty()) {
    out.labels = cut_components(g, weights, 0.0, &out.n_communities);
    return out;
  }

  double best_q = -std::numeric_limits<double>::infinity();
  double best_t = candidates.front();
  for (double t : candidates) {
    const double q = modularity(g, cut_components(g, weights, t));
    // Strict improvement only, so ties keep the smaller threshold.
    if (q > best_q + 1e-12) {
      best_q = q;
      best_t = t;
    }
  }
  out.cut_threshold = best_t;
  out.labels = cut_components(g, weights, best_t, &out.n_communities);
  return out;
}

inline CommunityAssignment detect_communities(const FlowState& state, const WeightedGraph& g,
                                              const ThresholdStrategy& strategy = {}) {
  return detect_communities(g, state.weights, strategy);
}

struct CommunityMetrics {
  double conductance = 0.0;             // mean over communities
  double internal_edge_density = 0.0;   // mean over communities
  double modularity = 0.0;
  double average_embeddedness = 0.0;    // mean over intra-community edges
  std::size_t n_communities = 0;
};

inline CommunityMetrics community_metrics(const WeightedGraph& g, std::span<const std::size_t> labels) {
  if (labels.size() != g.num_nodes()) throw ValidationError("label count does not match node count");
  std::size_t k = 0;
  const auto canon = detail::canonical_labels(labels, &k);
  std::vector<double> size(k, 0.0), volume(k, 0.0), cut(k, 0.0), internal(k, 0.0);
  double total_volume = 0.0;
  for (std::size_t x = 0; x < g.num_nodes(); ++x) {
    size[canon[x]] += 1.0;
    volume[canon[x]] += static_cast<double>(g.degree(x));
    total_volume += static_cast<double>(g.degree(x));
  }
  for (const auto& e : g.edges()) {
    if (canon[e.u] == canon[e.v]) {
      internal[canon[e.u]] += 1.0;
    } else {
      cut[canon[e.u]] += 1.0;
      cut[canon[e.v]] += 1.0;
    }
  }
  CommunityMetrics out;
  out.n_communities = k;
  for (std::size_t c = 0; c < k; ++c) {
    const double denom = std::min(volume[c], total_volume - volume[c]);
    out.conductance += denom > 0.0 ? cut[c] / denom : 0.0;
    out.internal_edge_density += size[c] >= 2.0 ? internal[c] / (size[c] * (size[c] - 1.0) / 2.0) : 0.0;
  }
  out.conductance /= static_cast<double>(k);
  out.internal_edge_density /= static_cast<double>(k);
  out.modularity = modularity(g, canon);

  // Jaccard overlap of closed neighbourhoods along intra-community edges.
  double overlap_sum = 0.0;
  std::size_t pairs = 0;
  std::vector<char> mark(g.num_nodes(), 0);
  for (const auto& e : g.edges()) {
    if (canon[e.u] != canon[e.v]) continue;
    mark[e.u] = 1;
    for (const auto& nb : g.neighbors(e.u)) mark[nb.node] = 1;
    double shared = mark[e.v] ? 1.0 : 0.0;
    for (const auto& nb : g.neighbors(e.v)) shared += mark[nb.node] ? 1.0 : 0.0;
    const double uni = static_cast<double>(g.degree(e.u) + g.degree(e.v) + 2) - shared;
    overlap_sum += shared / uni;
    ++pairs;
    mark[e.u] = 0;
    for (const auto& nb : g.neighbors(e.u)) mark[nb.node] = 0;
  }
  out.average_embeddedness = pairs ? overlap_sum / static_cast<double>(pairs) : 0.0;
  return out;
}

// Adjusted Rand index between two labelings of the same nodes.
inline double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw ValidationError("labelings differ in length");
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> ca, cb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
  }
  auto pairs = [](double c) { return c * (c - 1.0) / 2.0; };
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [_, c] : joint) index += pairs(c);
  for (const auto& [_, c] : ca) sa += pairs(c);
  for (const auto& [_, c] : cb) sb += pairs(c);
  const double expected = sa * sb / pairs(static_cast<double>(a.size()));
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;  // both labelings trivial and identical in shape
  return (index - expected) / (max_index - expected);
}

inline Json communities_to_json(const CommunityAssignment& c, const CommunityMetrics& m,
                                const WeightedGraph& g) {
  Json labels = Json::object();
  for (std::size_t x = 0; x < g.num_nodes(); ++x) labels[g.nodes()[x]] = c.labels[x];
  return {{"labels", std::move(labels)},
          {"label_vector", c.labels},
          {"cut_threshold", c.cut_threshold},
          {"strategy", c.strategy},
          {"n_communities", c.n_communities},
          {"metrics",
           {{"conductance", m.conductance},
            {"internal_edge_density", m.internal_edge_density},
            {"modularity", m.modularity},
            {"average_embeddedness", m.average_embeddedness}}}};
}

}  // namespace curvalign
