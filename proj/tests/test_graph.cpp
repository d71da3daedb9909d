#include <gtest/gtest.h>

#include "curvalign/graph.hpp"
#include "test_util.hpp"

using namespace curvalign;

namespace {

DistanceMatrix line_distances(const std::vector<double>& xs) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  DistanceMatrix d{Eigen::MatrixXd::Zero(n, n), MetricSpec::euclidean()};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      d.values(i, j) = std::abs(xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)]);
  return d;
}

DistanceMatrix random_points(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::normal_distribution<double> nd;
  PointSet ps;
  for (std::size_t i = 0; i < n; ++i) ps.items.push_back(std::to_string(i));
  ps.payload = Eigen::MatrixXd::NullaryExpr(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim),
                                            [&] { return nd(rng); });
  return to_distance(ps, MetricSpec::euclidean());
}

}  // namespace

TEST(LocalDensity, EquidistantPointsNormalizeToZero) {
  DistanceMatrix d{Eigen::MatrixXd::Ones(3, 3) - Eigen::MatrixXd::Identity(3, 3), MetricSpec::euclidean()};
  EXPECT_EQ(local_density(d, 2), (std::vector<double>{0, 0, 0}));
}

TEST(LocalDensity, LineHandComputation) {
  EXPECT_EQ(local_density(line_distances({0, 1, 2, 10}), 1), (std::vector<double>{1, 1, 1, 0}));
}

TEST(LocalDensity, RangeAndDuplicates) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 20; ++rep)
    for (double x : local_density(random_points(rng, 30, 3), 6)) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
    }
  EXPECT_THROW(local_density(line_distances({0, 0, 5}), 1), DegenerateInput);
  EXPECT_THROW(local_density(line_distances({0, 1}), 2), ValidationError);
}

TEST(AssignK, BoundsAndRounding) {
  const AdaptiveKnnParams p{5, 10};
  const std::vector<double> dens{0.0, 1.0, 0.5, 0.49, 0.1};
  EXPECT_EQ(assign_k(dens, p), (std::vector<std::size_t>{5, 10, 8, 7, 6}));
  const std::vector<double> bad{1.5};
  EXPECT_THROW(assign_k(bad, p), ValidationError);
}

TEST(BuildGraph, FullSelectionGivesCompleteGraph) {
  const auto g = build_graph(line_distances({0, 1, 3, 7}), {3, 3});
  EXPECT_EQ(g.num_edges(), 6u);
  EXPECT_DOUBLE_EQ(g.edges()[g.find_edge(0, 3).value()].weight, 7.0);
}

TEST(BuildGraph, FixedKGivesDegreeAtLeastK) {
  std::mt19937_64 rng(9);
  for (std::size_t k : {4u, 6u, 8u}) {
    const auto g = build_graph(random_points(rng, 40, 3), {k, k});
    for (std::size_t x = 0; x < g.num_nodes(); ++x) EXPECT_GE(g.degree(x), k);
    EXPECT_EQ(g.provenance().k_min, k);
  }
}

TEST(BuildGraph, SeparatedClustersAreDisconnected) {
  std::vector<double> xs;
  for (int i = 0; i < 5; ++i) xs.push_back(i);
  for (int i = 0; i < 5; ++i) xs.push_back(400.0 + i);
  try {
    build_graph(line_distances(xs), {2, 3});
    FAIL() << "expected DisconnectedGraph";
  } catch (const DisconnectedGraph& e) {
    EXPECT_EQ(e.components(), 2u);
  }
}

TEST(BuildGraph, ParamsValidated) {
  EXPECT_THROW(build_graph(line_distances({0, 1, 2}), {3, 3}), ValidationError);
  EXPECT_THROW(build_graph(line_distances({0, 1, 2, 3}), {3, 2}), ValidationError);
  EXPECT_THROW(build_graph(line_distances({0, 1, 2, 3}), {0, 2}), ValidationError);
}

TEST(BuildGraph, DegreesWithinAdaptiveRange) {
  // Every node keeps its own k(i) nearest neighbours, so deg >= k_min.
  std::mt19937_64 rng(4);
  const auto d = random_points(rng, 60, 2);
  const AdaptiveKnnParams p{3, 8};
  const auto g = build_graph(d, p);
  const auto k = assign_k(local_density(d, p.k_max), p);
  for (std::size_t x = 0; x < g.num_nodes(); ++x) EXPECT_GE(g.degree(x), k[x]);
  for (const auto& e : g.edges()) EXPECT_EQ(e.weight, d(e.u, e.v));
}

TEST(WeightedGraph, Validation) {
  EXPECT_THROW(WeightedGraph::with_index_names(2, {{0, 0, 1.0}}), ValidationError);
  EXPECT_THROW(WeightedGraph::with_index_names(2, {{0, 2, 1.0}}), ValidationError);
  EXPECT_THROW(WeightedGraph::with_index_names(2, {{0, 1, 0.0}}), ValidationError);
  EXPECT_THROW(WeightedGraph::with_index_names(2, {{0, 1, 1.0}, {1, 0, 2.0}}), ValidationError);
  const auto g = WeightedGraph::with_index_names(3, {{2, 0, 1.0}, {1, 0, 2.0}});
  EXPECT_EQ(g.edges()[0].u, 0u);
  EXPECT_EQ(g.edges()[0].v, 1u);
  EXPECT_EQ(g.edges()[1].v, 2u);
}

TEST(ShortestPath, Examples) {
  const auto path = WeightedGraph::with_index_names(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  EXPECT_EQ(shortest_path_matrix(path)(0, 2), 2.0);
  const auto tri = WeightedGraph::with_index_names(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 3.0}});
  EXPECT_EQ(shortest_path_matrix(tri)(0, 2), 2.0);
  EXPECT_THROW(shortest_path_matrix(WeightedGraph::with_index_names(3, {{0, 1, 1.0}})), DisconnectedGraph);
}

TEST(ShortestPath, MatchesFloydWarshall) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rep % 14;
    const auto edges = oracle::random_connected_graph(rng, n, 0.25);
    const auto fw = oracle::floyd_warshall(n, edges);
    const auto d = shortest_path_matrix(testutil::to_graph(n, edges));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(d(i, j), fw[i][j], 1e-12);
  }
}

TEST(GraphJson, RoundTrip) {
  std::mt19937_64 rng(1);
  const auto g = build_graph(random_points(rng, 20, 2), {3, 5});
  const auto back = graph_from_json(graph_to_json(g));
  EXPECT_EQ(back.nodes(), g.nodes());
  ASSERT_EQ(back.num_edges(), g.num_edges());
  for (std::size_t i = 0; i < g.num_edges(); ++i) EXPECT_EQ(back.edges()[i].weight, g.edges()[i].weight);
  EXPECT_EQ(back.provenance().k_max, 5u);
  EXPECT_THROW(graph_from_json(Json{{"nodes", {"a"}}}), ParseError);
}
