#pragma once

// Synthetic representational spaces: a torus surface, a planar swiss roll,
// their sigmoid-compressed copies, and stochastic block model graphs.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "curvalign/error.hpp"
#include "curvalign/graph.hpp"
#include "curvalign/graph_distances.hpp"
#include "curvalign/io.hpp"
#include "curvalign/random.hpp"
#include "curvalign/ricci_flow.hpp"

namespace curvalign {

enum class SynthFamily { Torus, SwissRoll, Sbm };
enum class SynthTransform { None, Sigmoid };

inline std::string to_string(SynthFamily f) {
  switch (f) {
    case SynthFamily::Torus: return "torus";
    case SynthFamily::SwissRoll: return "swiss_roll";
    case SynthFamily::Sbm: return "sbm";
  }
  return "unknown";
}

inline SynthFamily parse_synth_family(std::string_view s) {
  if (s == "torus") return SynthFamily::Torus;
  if (s == "swiss_roll") return SynthFamily::SwissRoll;
  if (s == "sbm") return SynthFamily::Sbm;
  throw InvalidSpec("unknown synthetic family '" + std::string(s) + "'");
}

struct SynthSpec {
  SynthFamily family = SynthFamily::Torus;
  std::size_t n_points = 200;
  // torus
  double major_radius = 2.0;
  double minor_radius = 1.0;
  // swiss roll
  double t_min = 1.5 * std::numbers::pi;
  double t_max = 4.5 * std::numbers::pi;
  double jitter = 0.3;
  double scale = 0.25;  // applied to the roll before jitter
  // stochastic block model
  std::vector<std::size_t> block_sizes;
  double p_in = 0.5;
  double p_out = 0.02;

  SynthTransform transform = SynthTransform::None;
  std::uint64_t seed = 1;

  std::string label() const {
    return to_string(family) + (transform == SynthTransform::Sigmoid ? "+sigmoid" : "");
  }

  void validate() const {
    if (family == SynthFamily::Sbm) {
      if (block_sizes.empty()) throw InvalidSpec("SBM needs at least one block");
      std::size_t total = 0;
      for (auto b : block_sizes) total += b;
      if (total < 10) throw InvalidSpec("SBM needs at least 10 nodes");
      if (!(p_in >= 0.0 && p_in <= 1.0 && p_out >= 0.0 && p_out <= 1.0))
        throw InvalidSpec("SBM probabilities must lie in [0,1]");
      return;
    }
    if (n_points < 10) throw InvalidSpec("need at least 10 points");
    if (family == SynthFamily::Torus && !(major_radius > minor_radius && minor_radius > 0.0))
      throw InvalidSpec("torus needs R > r > 0");
    if (family == SynthFamily::SwissRoll && !(t_max > t_min && jitter >= 0.0 && scale > 0.0))
      throw InvalidSpec("swiss roll needs t_max > t_min, jitter >= 0 and scale > 0");
  }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct SbmGraph {
  WeightedGraph graph;  // unit weights
  std::vector<std::size_t> blocks;
};

inline PointSet generate_points(const SynthSpec& spec) {
  spec.validate();
  if (spec.family == SynthFamily::Sbm) throw InvalidSpec("SBM produces a graph, not points");
  Rng rng(spec.seed);
  const auto n = static_cast<Eigen::Index>(spec.n_points);
  PointSet ps;
  ps.kind = PointSetKind::Embeddings;
  const double tau = 2.0 * std::numbers::pi;
  if (spec.family == SynthFamily::Torus) {
    ps.payload.resize(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = uniform(rng, 0.0, tau);
      const double v = uniform(rng, 0.0, tau);
      const double ring = spec.major_radius + spec.minor_radius * std::cos(v);
      ps.payload(i, 0) = ring * std::cos(u);
      ps.payload(i, 1) = ring * std::sin(u);
      ps.payload(i, 2) = spec.minor_radius * std::sin(v);
    }
  } else {
    ps.payload.resize(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      // Uniform in t^2 is (nearly) uniform in arc length along the spiral.
      const double t = uniform(rng, spec.t_min, spec.t_max);
      const double jx = normal(rng, 0.0, spec.jitter);
      const double jy = normal(rng, 0.0, spec.jitter);
      ps.payload(i, 0) = spec.scale * t * std::cos(t) + jx;
      ps.payload(i, 1) = spec.scale * t * std::sin(t) + jy;
    }
  }
  if (spec.transform == SynthTransform::Sigmoid) ps.payload = ps.payload.unaryExpr(&sigmoid);
  for (Eigen::Index i = 0; i < n; ++i) ps.items.push_back("p" + std::to_string(i));
  return ps;
}

inline SbmGraph generate_sbm(const SynthSpec& spec) {
  spec.validate();
  if (spec.family != SynthFamily::Sbm) throw InvalidSpec("not an SBM spec");
  Rng rng(spec.seed);
  std::vector<std::size_t> blocks;
  for (std::size_t b = 0; b < spec.block_sizes.size(); ++b)
    blocks.insert(blocks.end(), spec.block_sizes[b], b);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    for (std::size_t j = i + 1; j < blocks.size(); ++j)
      if (uniform01(rng) < (blocks[i] == blocks[j] ? spec.p_in : spec.p_out))
        edges.push_back({i, j, 1.0});
  return {WeightedGraph::with_index_names(blocks.size(), std::move(edges)), std::move(blocks)};
}

using SynthOutput = std::variant<PointSet, SbmGraph>;

inline SynthOutput generate(const SynthSpec& spec) {
  if (spec.family == SynthFamily::Sbm) return generate_sbm(spec);
  return generate_points(spec);
}

// ---------------------------------------------------------------------------
// Within- vs. across-family heat distance check

struct FamilyCheckOptions {
  AdaptiveKnnParams knn{5, 10};
  LaplacianSpec heat{WeightChannel::FlowWeights};
  FlowOptions flow{};
  std::vector<double> t_grid = default_t_grid();
};

struct FamilyCheckReport {
  std::vector<std::string> labels;
  std::vector<SynthFamily> families;
  Eigen::MatrixXd distances;
  Eigen::MatrixXd t_star;
  double within_max = 0.0;   // over distinct members of the same family
  double cross_min = 0.0;
  bool passed = true;
  std::string violation;     // "a vs b" for the first offending pair

  Json to_json() const {
    Json rows = Json::array(), trows = Json::array();
    for (Eigen::Index i = 0; i < distances.rows(); ++i) {
      Json r = Json::array(), t = Json::array();
      for (Eigen::Index j = 0; j < distances.cols(); ++j) {
        r.push_back(distances(i, j));
        t.push_back(t_star(i, j));
      }
      rows.push_back(std::move(r));
      trows.push_back(std::move(t));
    }
    return {{"labels", labels}, {"heat_distance", rows}, {"t_star", trows},
            {"within_family_max", within_max}, {"cross_family_min", cross_min},
            {"passed", passed}, {"violation", violation}};
  }
};

class CheckFailed : public Error {
 public:
  explicit CheckFailed(FamilyCheckReport report)
      : Error("within-family heat distance not below cross-family distance: " + report.violation),
        report_(std::move(report)) {}
  const char* kind() const noexcept override { return "CheckFailed"; }
  const FamilyCheckReport& report() const noexcept { return report_; }

 private:
  FamilyCheckReport report_;
};

// Builds one graph per spec (vector metric: Euclidean), runs the flow when
// the flow channel is requested, and compares all pairs by heat distance.
// Throws CheckFailed unless every within-family distance is below every
// cross-family distance.
inline FamilyCheckReport family_distance_check(const std::vector<SynthSpec>& specs,
                                               const FamilyCheckOptions& options = {}) {
  if (specs.empty()) throw InvalidSpec("no specs given");
  for (const auto& s : specs) {
    if (s.family == SynthFamily::Sbm) throw InvalidSpec("family check needs point-cloud families");
    if (s.n_points != specs.front().n_points) throw InvalidSpec("all specs need equal n_points");
  }
  std::vector<WeightedGraph> graphs;
  std::vector<std::vector<double>> flows;
  FamilyCheckReport rep;
  for (const auto& s : specs) {
    const PointSet ps = generate_points(s);
    graphs.push_back(build_graph(to_distance(ps, MetricSpec::euclidean()), options.knn, ps.items));
    flows.push_back(options.heat.channel == WeightChannel::FlowWeights
                        ? run_flow(graphs.back(), options.flow).weights
                        : std::vector<double>{});
    rep.labels.push_back(s.label());
    rep.families.push_back(s.family);
  }
  const auto k = static_cast<Eigen::Index>(specs.size());
  rep.distances = Eigen::MatrixXd::Zero(k, k);
  rep.t_star = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i; j < k; ++j) {
      const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(j);
      const auto h = heat_distance(HeatOperand{graphs[a], flows[a]}, HeatOperand{graphs[b], flows[b]},
                                   options.heat, options.t_grid);
      rep.distances(i, j) = rep.distances(j, i) = h.value;
      rep.t_star(i, j) = rep.t_star(j, i) = h.t_star;
    }

  rep.within_max = 0.0;
  rep.cross_min = std::numeric_limits<double>::infinity();
  std::pair<Eigen::Index, Eigen::Index> worst_within{-1, -1}, worst_cross{-1, -1};
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const double d = rep.distances(i, j);
      if (rep.families[static_cast<std::size_t>(i)] == rep.families[static_cast<std::size_t>(j)]) {
        if (d >= rep.within_max) {
          rep.within_max = d;
          worst_within = {i, j};
        }
      } else if (d < rep.cross_min) {
        rep.cross_min = d;
        worst_cross = {i, j};
      }
    }
  if (worst_cross.first < 0) rep.cross_min = 0.0;  // single family: vacuous
  rep.passed = worst_cross.first < 0 || worst_within.first < 0 || rep.within_max < rep.cross_min;
  if (!rep.passed) {
    auto name = [&](std::pair<Eigen::Index, Eigen::Index> p) {
      return rep.labels[static_cast<std::size_t>(p.first)] + " vs " +
             rep.labels[static_cast<std::size_t>(p.second)];
    };
    rep.violation = name(worst_within) + " (" + format_number(rep.within_max) + ") >= " +
                    name(worst_cross) + " (" + format_number(rep.cross_min) + ")";
    throw CheckFailed(rep);
  }
  return rep;
}

// The four datasets of the within/across-family experiment.
inline std::vector<SynthSpec> standard_family_specs(std::size_t n_points = 200, std::uint64_t seed = 1) {
  std::vector<SynthSpec> specs;
  for (auto family : {SynthFamily::Torus, SynthFamily::SwissRoll})
    for (auto transform : {SynthTransform::None, SynthTransform::Sigmoid}) {
      SynthSpec s;
      s.family = family;
      s.n_points = n_points;
      s.transform = transform;
      s.seed = child_seed(seed, static_cast<std::uint64_t>(family));
      specs.push_back(s);
    }
  return specs;
}

}  // namespace curvalign
