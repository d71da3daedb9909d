#pragma once

// Undirected weighted graphs, the adaptive kNN construction and all-pairs
// weighted shortest paths.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "curvalign/error.hpp"
#include "curvalign/io.hpp"
#include "curvalign/report.hpp"

namespace curvalign {

// Statistic of the k_max nearest-neighbour distances whose inverse is the
// raw local density.
enum class DensityKernel { MeanDistance, KthDistance };

inline std::string to_string(DensityKernel k) {
  return k == DensityKernel::MeanDistance ? "mean" : "kth";
}

inline DensityKernel parse_density_kernel(std::string_view s) {
  if (s == "mean") return DensityKernel::MeanDistance;
  if (s == "kth") return DensityKernel::KthDistance;
  throw ValidationError("unknown density kernel '" + std::string(s) + "'");
}

struct AdaptiveKnnParams {
  std::size_t k_min = 5;
  std::size_t k_max = 10;
  DensityKernel kernel = DensityKernel::MeanDistance;

  void validate(std::size_t n) const {
    if (k_min < 1 || k_min > k_max || k_max >= n)
      throw ValidationError("need 1 <= k_min <= k_max < N (k_min=" + std::to_string(k_min) +
                            ", k_max=" + std::to_string(k_max) + ", N=" + std::to_string(n) + ")");
  }
};

struct GraphProvenance {
  std::size_t k_min = 0;  // 0 when the graph was not built by adaptive kNN
  std::size_t k_max = 0;
  std::string metric = "none";
  std::string kernel = "none";
};

struct Edge {
  std::size_t u = 0;  // u < v
  std::size_t v = 0;
  double weight = 1.0;
};

struct Neighbor {
  std::size_t node = 0;
  std::size_t edge = 0;  // index into WeightedGraph::edges()
};

class WeightedGraph {
 public:
  WeightedGraph() = default;

  // Edges are canonicalised to u < v and sorted by (u, v).
  WeightedGraph(std::vector<std::string> nodes, std::vector<Edge> edges,
                GraphProvenance provenance = {})
      : nodes_(std::move(nodes)), edges_(std::move(edges)), provenance_(std::move(provenance)) {
    const std::size_t n = nodes_.size();
    for (auto& e : edges_) {
      if (e.u == e.v) throw ValidationError("self-loop at node " + std::to_string(e.u));
      if (e.u >= n || e.v >= n) throw ValidationError("edge endpoint out of range");
      if (!(e.weight > 0.0) || !std::isfinite(e.weight))
        throw ValidationError("edge weights must be positive and finite");
      if (e.u > e.v) std::swap(e.u, e.v);
    }
    std::sort(edges_.begin(), edges_.end(),
              [](const Edge& a, const Edge& b) { return std::pair(a.u, a.v) < std::pair(b.u, b.v); });
    for (std::size_t i = 1; i < edges_.size(); ++i)
      if (edges_[i].u == edges_[i - 1].u && edges_[i].v == edges_[i - 1].v)
        throw ValidationError("duplicate edge (" + std::to_string(edges_[i].u) + "," +
                              std::to_string(edges_[i].v) + ")");
    adjacency_.assign(n, {});
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      adjacency_[edges_[i].u].push_back({edges_[i].v, i});
      adjacency_[edges_[i].v].push_back({edges_[i].u, i});
    }
    for (auto& row : adjacency_)
      std::sort(row.begin(), row.end(),
                [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
  }

  // Nodes named "0".."n-1".
  static WeightedGraph with_index_names(std::size_t n, std::vector<Edge> edges,
                                        GraphProvenance provenance = {}) {
    std::vector<std::string> names(n);
    for (std::size_t i = 0; i < n; ++i) names[i] = std::to_string(i);
    return WeightedGraph(std::move(names), std::move(edges), std::move(provenance));
  }

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const GraphProvenance& provenance() const { return provenance_; }
  std::span<const Neighbor> neighbors(std::size_t x) const { return adjacency_.at(x); }
  std::size_t degree(std::size_t x) const { return adjacency_.at(x).size(); }

  std::optional<std::size_t> find_edge(std::size_t a, std::size_t b) const {
    if (a >= num_nodes() || b >= num_nodes()) return std::nullopt;
    for (const auto& nb : adjacency_[a])
      if (nb.node == b) return nb.edge;
    return std::nullopt;
  }

  std::vector<double> weights() const {
    std::vector<double> w(edges_.size());
    for (std::size_t i = 0; i < edges_.size(); ++i) w[i] = edges_[i].weight;
    return w;
  }

  // Same topology, new weights (indexed like edges()).
  WeightedGraph with_weights(std::span<const double> w) const {
    if (w.size() != edges_.size()) throw ValidationError("weight count does not match edge count");
    std::vector<Edge> e = edges_;
    for (std::size_t i = 0; i < e.size(); ++i) e[i].weight = w[i];
    return WeightedGraph(nodes_, std::move(e), provenance_);
  }

 private:
  std::vector<std::string> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
  GraphProvenance provenance_;
};

// Component label per node, labels contiguous in order of first appearance.
inline std::vector<std::size_t> connected_components(const WeightedGraph& g,
                                                     std::size_t* count = nullptr) {
  constexpr auto unset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> label(g.num_nodes(), unset);
  std::size_t next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < g.num_nodes(); ++s) {
    if (label[s] != unset) continue;
    label[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      for (const auto& nb : g.neighbors(x))
        if (label[nb.node] == unset) {
          label[nb.node] = next;
          stack.push_back(nb.node);
        }
    }
    ++next;
  }
  if (count) *count = next;
  return label;
}

inline void require_connected(const WeightedGraph& g) {
  std::size_t count = 0;
  connected_components(g, &count);
  if (count > 1) throw DisconnectedGraph(count);
}

// ---------------------------------------------------------------------------
// Shortest paths

// Dijkstra from `source` using `weights` (indexed like g.edges()).
inline void single_source_distances(const WeightedGraph& g, std::span<const double> weights,
                                    std::size_t source, std::span<double> dist) {
  using Item = std::pair<double, std::size_t>;
  std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    const auto [d, x] = heap.top();
    heap.pop();
    if (d > dist[x]) continue;
    for (const auto& nb : g.neighbors(x)) {
      const double cand = d + weights[nb.edge];
      if (cand < dist[nb.node]) {
        dist[nb.node] = cand;
        heap.emplace(cand, nb.node);
      }
    }
  }
}

inline Eigen::MatrixXd shortest_path_values(const WeightedGraph& g,
                                            std::span<const double> weights) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  Eigen::MatrixXd out(n, n);
  std::vector<double> row(g.num_nodes());
  for (Eigen::Index s = 0; s < n; ++s) {
    single_source_distances(g, weights, static_cast<std::size_t>(s), row);
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!std::isfinite(row[static_cast<std::size_t>(t)])) {
        std::size_t count = 0;
        connected_components(g, &count);
        throw DisconnectedGraph(count);
      }
      out(s, t) = row[static_cast<std::size_t>(t)];
    }
  }
  // Dijkstra is exact per source but s->t and t->s may round differently.
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) out(i, j) = out(j, i) = std::min(out(i, j), out(j, i));
  }
  return out;
}

inline DistanceMatrix shortest_path_matrix(const WeightedGraph& g, std::span<const double> weights) {
  return {shortest_path_values(g, weights), MetricSpec::shortest_path()};
}

inline DistanceMatrix shortest_path_matrix(const WeightedGraph& g) {
  const auto w = g.weights();
  return shortest_path_matrix(g, w);
}

// ---------------------------------------------------------------------------
// Adaptive kNN construction

namespace detail {

// Indices of the k nearest neighbours of i, nearest first, ties by index.
inline std::vector<std::size_t> nearest_neighbors(const DistanceMatrix& d, std::size_t i,
                                                  std::size_t k) {
  std::vector<std::size_t> order;
  order.reserve(d.size() - 1);
  for (std::size_t j = 0; j < d.size(); ++j)
    if (j != i) order.push_back(j);
  const auto closer = [&](std::size_t a, std::size_t b) {
    return d(i, a) != d(i, b) ? d(i, a) < d(i, b) : a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    closer);
  order.resize(k);
  return order;
}

}  // namespace detail

// Min-max normalised inverse kNN distance. All-equal raw densities map to 0.
inline std::vector<double> local_density(const DistanceMatrix& d, std::size_t k_max,
                                         DensityKernel kernel = DensityKernel::MeanDistance) {
  const std::size_t n = d.size();
  if (k_max < 1 || k_max >= n) throw ValidationError("local_density needs 1 <= k_max < N");
  std::vector<double> density(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nn = detail::nearest_neighbors(d, i, k_max);
    double stat = 0.0;
    if (kernel == DensityKernel::MeanDistance) {
      for (std::size_t j : nn) stat += d(i, j);
      stat /= static_cast<double>(k_max);
    } else {
      stat = d(i, nn.back());
    }
    if (!(stat > 0.0))
      throw DegenerateInput("item " + std::to_string(i) +
                            " has zero distance to its neighbours (duplicate points)");
    density[i] = 1.0 / stat;
  }
  const auto [lo, hi] = std::minmax_element(density.begin(), density.end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (double& x : density) x = range > 0.0 ? std::clamp((x - min) / range, 0.0, 1.0) : 0.0;
  return density;
}

// Linear interpolation between k_min and k_max, rounded half up.
inline std::vector<std::size_t> assign_k(std::span<const double> density,
                                         const AdaptiveKnnParams& params) {
  std::vector<std::size_t> k(density.size());
  const double span = static_cast<double>(params.k_max - params.k_min);
  for (std::size_t i = 0; i < density.size(); ++i) {
    if (!(density[i] >= 0.0 && density[i] <= 1.0))
      throw ValidationError("density outside [0,1]");
    const double raw = static_cast<double>(params.k_min) + density[i] * span;
    k[i] = std::clamp(static_cast<std::size_t>(std::floor(raw + 0.5)), params.k_min, params.k_max);
  }
  return k;
}

inline WeightedGraph build_graph(const DistanceMatrix& d, const AdaptiveKnnParams& params,
                                 std::vector<std::string> ids = {}) {
  const std::size_t n = d.size();
  params.validate(n);
  if (ids.empty())
    for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  if (ids.size() != n) throw ValidationError("id count does not match distance matrix");
  const auto density = local_density(d, params.k_max, params.kernel);
  const auto k = assign_k(density, params);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : detail::nearest_neighbors(d, i, k[i])) pairs.emplace_back(std::min(i, j), std::max(i, j));
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (auto [u, v] : pairs) {
    if (!(d(u, v) > 0.0))
      throw DegenerateInput("zero distance between neighbours " + std::to_string(u) + " and " +
                            std::to_string(v));
    edges.push_back({u, v, d(u, v)});
  }
  WeightedGraph g(std::move(ids), std::move(edges),
                  {params.k_min, params.k_max, to_string(d.source_metric), to_string(params.kernel)});
  require_connected(g);
  return g;
}

// ---------------------------------------------------------------------------
// JSON: {nodes:[ids], edges:[{u,v,weight}], provenance:{k_min,k_max,metric}}

inline Json graph_to_json(const WeightedGraph& g) {
  Json edges = Json::array();
  for (const auto& e : g.edges()) edges.push_back({{"u", e.u}, {"v", e.v}, {"weight", e.weight}});
  const auto& p = g.provenance();
  return {{"nodes", g.nodes()},
          {"edges", std::move(edges)},
          {"provenance",
           {{"k_min", p.k_min}, {"k_max", p.k_max}, {"metric", p.metric}, {"density_kernel", p.kernel}}}};
}

inline WeightedGraph graph_from_json(const Json& j) {
  try {
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges"))
      edges.push_back({e.at("u").get<std::size_t>(), e.at("v").get<std::size_t>(),
                       e.at("weight").get<double>()});
    GraphProvenance p;
    if (j.contains("provenance")) {
      const auto& pj = j.at("provenance");
      p.k_min = pj.value("k_min", std::size_t{0});
      p.k_max = pj.value("k_max", std::size_t{0});
      p.metric = pj.value("metric", std::string("none"));
      p.kernel = pj.value("density_kernel", std::string("none"));
    }
    return WeightedGraph(j.at("nodes").get<std::vector<std::string>>(), std::move(edges), p);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("graph JSON: ") + e.what());
  }
}

}  // namespace curvalign
