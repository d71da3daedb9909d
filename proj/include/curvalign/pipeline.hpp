#pragma once

// End-to-end analysis of one or more representations:
//
//   per representation: distances -> adaptive kNN graph -> curvature ->
//     Ricci flow -> RDMs -> GMM of curvatures -> communities
//   per pair: RSA alignment, profile analysis, W1, KLD, heat distance and
//     subsample statistics
//
// Everything lands in one output directory together with a manifest that
// lists every file with its content hash.

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "curvalign/curvalign.hpp"

namespace curvalign {

struct InputSpec {
  std::string name;
  std::string path;
  PointSetKind kind = PointSetKind::Embeddings;
};

struct RunConfig {
  std::vector<InputSpec> inputs;
  MetricSpec graph_metric = MetricSpec::euclidean();  // for embeddings
  std::vector<MetricSpec> rdm_metrics = {MetricSpec::euclidean(), MetricSpec::cosine(),
                                         MetricSpec::minkowski(3.0)};
  AdaptiveKnnParams knn{5, 10};
  std::vector<std::pair<std::size_t, std::size_t>> knn_sweep;  // extra (k_min, k_max) grids
  double alpha = kDefaultAlpha;
  std::size_t flow_iterations = 30;
  bool normalize_flow = false;
  ThresholdStrategy communities = ThresholdStrategy::modularity_scan();
  std::vector<double> t_grid = default_t_grid();
  WeightChannel heat_channel = WeightChannel::FlowWeights;
  std::size_t gmm_k_max = 5;
  std::size_t gmm_restarts = 5;
  std::size_t kld_bins = 20;
  std::size_t hist_bins = 30;
  std::size_t n_subset = 70;
  std::size_t n_iter = 100;
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  // Everything except the output directory, which does not affect results.
  Json to_json() const {
    Json inputs_j = Json::array();
    for (const auto& in : inputs)
      inputs_j.push_back({{"name", in.name}, {"path", in.path}, {"kind", to_string(in.kind)}});
    Json metrics = Json::array();
    for (const auto& m : rdm_metrics) metrics.push_back(to_string(m));
    return {{"inputs", inputs_j},
            {"graph_metric", to_string(graph_metric)},
            {"rdm_metrics", metrics},
            {"k_min", knn.k_min},
            {"k_max", knn.k_max},
            {"density_kernel", to_string(knn.kernel)},
            {"knn_sweep", knn_sweep},
            {"alpha", alpha},
            {"flow_iterations", flow_iterations},
            {"normalize_flow", normalize_flow},
            {"community_strategy",
             communities.kind == ThresholdStrategy::Kind::Fixed ? "fixed" : "modularity_scan"},
            {"community_threshold", communities.value},
            {"t_grid", t_grid},
            {"heat_channel", to_string(heat_channel)},
            {"gmm_k_max", gmm_k_max},
            {"gmm_restarts", gmm_restarts},
            {"kld_bins", kld_bins},
            {"hist_bins", hist_bins},
            {"n_subset", n_subset},
            {"n_iter", n_iter},
            {"seed", seed},
            {"similarity_to_distance", "d = max(0, 1 - s)"},
            {"bic", "-2 logL + (3k-1) ln n"}};
  }

  static RunConfig from_json(const Json& j) {
    try {
      RunConfig c;
      for (const auto& in : j.at("inputs"))
        c.inputs.push_back({in.at("name").get<std::string>(), in.at("path").get<std::string>(),
                            parse_pointset_kind(in.value("kind", std::string("embeddings")))});
      if (j.contains("graph_metric")) c.graph_metric = parse_metric(j.at("graph_metric").get<std::string>());
      if (j.contains("rdm_metrics")) {
        c.rdm_metrics.clear();
        for (const auto& m : j.at("rdm_metrics")) c.rdm_metrics.push_back(parse_metric(m.get<std::string>()));
      }
      c.knn.k_min = j.value("k_min", c.knn.k_min);
      c.knn.k_max = j.value("k_max", c.knn.k_max);
      if (j.contains("density_kernel"))
        c.knn.kernel = parse_density_kernel(j.at("density_kernel").get<std::string>());
      if (j.contains("knn_sweep"))
        c.knn_sweep = j.at("knn_sweep").get<std::vector<std::pair<std::size_t, std::size_t>>>();
      c.alpha = j.value("alpha", c.alpha);
      c.flow_iterations = j.value("flow_iterations", c.flow_iterations);
      c.normalize_flow = j.value("normalize_flow", c.normalize_flow);
      if (j.value("community_strategy", std::string("modularity_scan")) == "fixed")
        c.communities = ThresholdStrategy::fixed(j.at("community_threshold").get<double>());
      if (j.contains("t_grid")) c.t_grid = j.at("t_grid").get<std::vector<double>>();
      if (j.contains("heat_channel")) c.heat_channel = parse_weight_channel(j.at("heat_channel").get<std::string>());
      c.gmm_k_max = j.value("gmm_k_max", c.gmm_k_max);
      c.gmm_restarts = j.value("gmm_restarts", c.gmm_restarts);
      c.kld_bins = j.value("kld_bins", c.kld_bins);
      c.hist_bins = j.value("hist_bins", c.hist_bins);
      c.n_subset = j.value("n_subset", c.n_subset);
      c.n_iter = j.value("n_iter", c.n_iter);
      c.seed = j.at("seed").get<std::uint64_t>();
      c.output_dir = j.value("output_dir", c.output_dir);
      return c;
    } catch (const Json::exception& e) {
      throw ParseError(std::string("config JSON: ") + e.what());
    }
  }

  std::string hash() const { return hex64(fnv1a(canonicalize(to_json()).dump())); }

  void validate() const {
    if (inputs.empty()) throw ValidationError("at least one input representation is required");
    std::map<std::string, int> seen;
    for (const auto& in : inputs) {
      if (in.name.empty() || in.name.find_first_of("/\\") != std::string::npos)
        throw ValidationError("input names must be nonempty and contain no path separators");
      if (seen[in.name]++) throw ValidationError("duplicate input name '" + in.name + "'");
    }
    if (knn.k_min < 1 || knn.k_min > knn.k_max) throw ValidationError("need 1 <= k_min <= k_max");
    for (const auto& [lo, hi] : knn_sweep)
      if (lo < 1 || lo > hi) throw ValidationError("sweep grids need 1 <= k_min <= k_max");
    validate_alpha(alpha);
    if (t_grid.empty()) throw ValidationError("t grid is empty");
    for (double t : t_grid)
      if (!(t > 0.0)) throw ValidationError("t values must be positive");
    if (gmm_k_max < 1) throw ValidationError("gmm_k_max must be >= 1");
    if (kld_bins < 2 || hist_bins < 1) throw ValidationError("bin counts too small");
    if (n_subset < 4 || n_iter < 1) throw ValidationError("need n_subset >= 4 and n_iter >= 1");
  }
};

struct StageError {
  std::string stage;
  std::string input;
  std::string kind;
  std::string message;
};

struct PipelineResult {
  AnalysisReport report;
  std::vector<StageError> errors;
  std::vector<std::string> files;  // relative to the output directory
  bool ok() const { return errors.empty(); }
};

// Everything computed for one representation, in dependency order.
struct RepresentationResult {
  InputSpec input;
  std::optional<PointSet> points;
  std::optional<DistanceMatrix> distances;
  std::optional<WeightedGraph> graph;
  std::optional<CurvatureMap> curvature;
  std::optional<FlowState> flow;
  std::vector<Rdm> rdms;
};

namespace detail {

// Distances -> graph -> curvature for one point set (used on subsets too).
inline MetricSpec graph_metric_for(const PointSet& ps, const RunConfig& cfg) {
  return ps.kind == PointSetKind::Similarity ? MetricSpec::from_similarity() : cfg.graph_metric;
}

inline WeightedGraph graph_for(const PointSet& ps, const RunConfig& cfg) {
  return build_graph(to_distance(ps, graph_metric_for(ps, cfg)), cfg.knn, ps.items);
}

inline FlowOptions flow_options(const RunConfig& cfg) {
  FlowOptions f;
  f.iterations = cfg.flow_iterations;
  f.alpha = cfg.alpha;
  f.normalize = cfg.normalize_flow;
  return f;
}

class OutputWriter {
 public:
  OutputWriter(std::filesystem::path root, std::string stamp)
      : root_(std::move(root)), stamp_(std::move(stamp)) {}

  void json(const std::string& rel, Json j, const std::string& config_hash, std::uint64_t seed) {
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    write(rel, dump_canonical(j));
  }

  void matrix_csv(const std::string& rel, const std::vector<std::string>& ids, const Eigen::MatrixXd& m) {
    const auto path = prepare(rel);
    write_matrix_csv(path.string(), ids, m, stamp_);
    files_.push_back(rel);
  }

  void text(const std::string& rel, const std::string& body) { write(rel, "# " + stamp_ + "\n" + body); }

  const std::vector<std::string>& files() const { return files_; }
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path prepare(const std::string& rel) {
    const auto path = root_ / rel;
    std::filesystem::create_directories(path.parent_path());
    return path;
  }
  void write(const std::string& rel, const std::string& body) {
    write_text_file(prepare(rel).string(), body);
    files_.push_back(rel);
  }

  std::filesystem::path root_;
  std::string stamp_;
  std::vector<std::string> files_;
};

// "minkowski(p=3)" -> "minkowski_p_3"
inline std::string file_tag(const std::string& tag) {
  std::string out;
  for (char c : tag) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '.';
    if (keep)
      out += c;
    else if (!out.empty() && out.back() != '_')
      out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

inline std::string csv_number(double v) { return format_number(round_significant(v)); }

}  // namespace detail

inline PipelineResult run_pipeline(const RunConfig& cfg) {
  cfg.validate();
  const std::string config_hash = cfg.hash();
  const std::string stamp = "config_hash=" + config_hash + " seed=" + std::to_string(cfg.seed);
  detail::OutputWriter out(cfg.output_dir, stamp);
  PipelineResult result;
  auto& report = result.report;
  report.provenance = {{"config", cfg.to_json()},
                       {"config_hash", config_hash},
                       {"seed", cfg.seed},
                       {"tool", "curvalign"},
                       {"tool_version", kToolVersion},
                       {"transport_backend", kTransportBackend}};
  report.results = {{"representations", Json::object()}, {"pairs", Json::array()}};

  // Runs a stage; records the error and returns false if it throws.
  auto stage = [&](const std::string& name, const std::string& input, auto&& fn) {
    try {
      fn();
      return true;
    } catch (const Error& e) {
      result.errors.push_back({name, input, e.kind(), e.what()});
    } catch (const std::exception& e) {
      result.errors.push_back({name, input, "std::exception", e.what()});
    }
    return false;
  };

  const FlowOptions flow_opts = detail::flow_options(cfg);
  std::vector<RepresentationResult> reps;
  for (std::size_t r = 0; r < cfg.inputs.size(); ++r) {
    RepresentationResult rep{cfg.inputs[r], {}, {}, {}, {}, {}, {}};
    const std::string& name = rep.input.name;
    Json block = Json::object();
    const std::uint64_t rep_seed = child_seed(cfg.seed, r);

    if (!stage("ingest", name, [&] { rep.points = load_pointset(rep.input.path, rep.input.kind); })) {
      reps.push_back(std::move(rep));
      continue;
    }
    block["n_items"] = rep.points->size();
    block["kind"] = to_string(rep.input.kind);

    if (stage("graph", name, [&] {
          rep.distances = to_distance(*rep.points, detail::graph_metric_for(*rep.points, cfg));
          rep.graph = build_graph(*rep.distances, cfg.knn, rep.points->items);
          out.json(name + "/graph.json", graph_to_json(*rep.graph), config_hash, cfg.seed);
          block["graph"] = {{"n_edges", rep.graph->num_edges()},
                            {"metric", rep.graph->provenance().metric}};
        })) {
      stage("curvature", name, [&] {
        rep.curvature = orc_all(*rep.graph, cfg.alpha);
        out.json(name + "/curvature.json", curvature_to_json(*rep.curvature), config_hash, cfg.seed);
        const auto k = rep.curvature->values();
        block["curvature"] = {{"n_edges", k.size()},
                              {"min", *std::min_element(k.begin(), k.end())},
                              {"max", *std::max_element(k.begin(), k.end())},
                              {"mean", std::accumulate(k.begin(), k.end(), 0.0) / static_cast<double>(k.size())}};
      });
      if (rep.curvature) {
        stage("gmm", name, [&] {
          const auto k = rep.curvature->values();
          const auto sel = select_gmm(k, cfg.gmm_k_max, child_seed(rep_seed, 1), cfg.gmm_restarts);
          Json candidates = Json::array();
          for (const auto& c : sel.candidates) candidates.push_back({{"k", c.n_components}, {"bic", c.bic}});
          Json g = gmm_to_json(sel.best);
          g["candidates"] = candidates;
          block["gmm"] = g;
          out.json(name + "/gmm.json", g, config_hash, cfg.seed);
          // Histogram for plotting, bins over the observed range.
          const double lo = *std::min_element(k.begin(), k.end());
          const double hi = *std::max_element(k.begin(), k.end());
          const double width = hi > lo ? (hi - lo) / static_cast<double>(cfg.hist_bins) : 1.0;
          std::vector<std::size_t> counts(cfg.hist_bins, 0);
          for (double v : k)
            ++counts[std::min(cfg.hist_bins - 1, static_cast<std::size_t>((v - lo) / width))];
          std::ostringstream csv;
          csv << "bin_left,bin_right,count\n";
          for (std::size_t b = 0; b < cfg.hist_bins; ++b)
            csv << detail::csv_number(lo + width * static_cast<double>(b)) << ','
                << detail::csv_number(lo + width * static_cast<double>(b + 1)) << ',' << counts[b] << '\n';
          out.text(name + "/curvature_hist.csv", csv.str());
        });
      }
      for (const auto& [lo, hi] : cfg.knn_sweep) {
        const std::string tag = "k" + std::to_string(lo) + "_" + std::to_string(hi);
        stage("sweep", name, [&] {
          AdaptiveKnnParams p = cfg.knn;
          p.k_min = lo;
          p.k_max = hi;
          const auto g = build_graph(*rep.distances, p, rep.points->items);
          const auto c = orc_all(g, cfg.alpha);
          out.json(name + "/sweep_" + tag + "_curvature.json", curvature_to_json(c), config_hash, cfg.seed);
          block["sweep"][tag] = {{"n_edges", g.num_edges()}, {"curvature_w1_vs_base",
                                 rep.curvature ? Json(curvature_w1(*rep.curvature, c)) : Json(nullptr)}};
        });
      }
      stage("flow", name, [&] {
        rep.flow = run_flow(*rep.graph, flow_opts);
        out.json(name + "/flow.json", flow_to_json(*rep.flow, *rep.graph), config_hash, cfg.seed);
        block["flow"] = {{"iterations", rep.flow->iteration}, {"floor_events", rep.flow->floor_events}};
      });
      if (rep.flow) {
        stage("communities", name, [&] {
          const auto c = detect_communities(*rep.flow, *rep.graph, cfg.communities);
          const auto m = community_metrics(*rep.graph, c.labels);
          Json j = communities_to_json(c, m, *rep.graph);
          out.json(name + "/communities.json", j, config_hash, cfg.seed);
          j.erase("labels");
          j.erase("label_vector");
          block["communities"] = j;
        });
      }
    }

    stage("rdm", name, [&] {
      if (rep.points->kind == PointSetKind::Embeddings)
        for (const auto& m : cfg.rdm_metrics) rep.rdms.push_back(build_rdm(*rep.points, m));
      if (rep.graph) rep.rdms.push_back(build_rdm(*rep.graph));
      if (rep.graph && rep.flow) rep.rdms.push_back(build_rdm(*rep.graph, *rep.flow));
      Json tags = Json::array();
      for (const auto& rdm : rep.rdms) {
        out.matrix_csv(name + "/rdm_" + detail::file_tag(rdm.tag()) + ".csv", rdm.items, rdm.values);
        tags.push_back(rdm.tag());
      }
      block["rdms"] = tags;
    });
    report.results["representations"][name] = block;
    reps.push_back(std::move(rep));
  }

  // Alignment across every RDM of every representation.
  stage("alignment", "*", [&] {
    std::vector<Rdm> all;
    std::vector<std::string> labels;
    for (const auto& rep : reps)
      for (const auto& rdm : rep.rdms)
        if (all.empty() || rdm.items == all.front().items) {
          all.push_back(rdm);
          labels.push_back(rep.input.name + ":" + rdm.tag());
        }
    if (all.empty()) return;
    const Eigen::MatrixXd a = alignment_matrix(all);
    out.matrix_csv("alignment_matrix.csv", labels, a);
    report.results["alignment"] = {{"labels", labels}, {"file", "alignment_matrix.csv"}};
  });

  // Pairwise comparisons.
  const auto k = static_cast<Eigen::Index>(reps.size());
  Eigen::MatrixXd ws1_m = Eigen::MatrixXd::Zero(k, k), heat_m = Eigen::MatrixXd::Zero(k, k);
  std::vector<std::string> names;
  for (const auto& rep : reps) names.push_back(rep.input.name);
  for (std::size_t a = 0; a < reps.size(); ++a)
    for (std::size_t b = a + 1; b < reps.size(); ++b) {
      const auto& ra = reps[a];
      const auto& rb = reps[b];
      const std::string pair = ra.input.name + "__" + rb.input.name;
      if (!ra.curvature || !rb.curvature || !ra.flow || !rb.flow) {
        result.errors.push_back({"compare", pair, "SkippedDependency", "an upstream stage failed"});
        continue;
      }
      Json pj = {{"pair", {ra.input.name, rb.input.name}}};
      stage("compare", pair, [&] {
        pj["ws1"] = curvature_w1(*ra.curvature, *rb.curvature);
        pj["kld"] = curvature_kld(*ra.curvature, *rb.curvature, cfg.kld_bins);
        const auto heat = heat_distance(HeatOperand{*ra.graph, ra.flow->weights},
                                        HeatOperand{*rb.graph, rb.flow->weights},
                                        LaplacianSpec{cfg.heat_channel}, cfg.t_grid);
        pj["heat"] = {{"value", heat.value}, {"t_star", heat.t_star}, {"channel", to_string(cfg.heat_channel)}};
        const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
        ws1_m(ia, ib) = ws1_m(ib, ia) = pj["ws1"].get<double>();
        heat_m(ia, ib) = heat_m(ib, ia) = heat.value;

        // Profile analysis for every metric both sides share.
        std::ostringstream prof;
        prof << "id,metric_pair,r\n";
        for (const auto& x : ra.rdms)
          for (const auto& y : rb.rdms) {
            if (!(x.metric == y.metric)) continue;
            const auto rs = profile_analysis(x, y);
            for (std::size_t i = 0; i < rs.size(); ++i)
              prof << csv::quote_if_needed(x.items[i]) << ',' << x.tag() << ':' << y.tag() << ','
                   << (rs[i] ? detail::csv_number(*rs[i]) : std::string("nan")) << '\n';
          }
        out.text("pairs/" + pair + "_profile.csv", prof.str());

        // Repeated random subsets, graphs rebuilt on each subset.
        const std::size_t n_total = ra.points->size();
        const std::size_t n_subset = std::min(cfg.n_subset, n_total);
        const std::uint64_t pair_seed = child_seed(cfg.seed, 1000 + a * reps.size() + b);
        auto ws1_closure = [&](const std::vector<std::size_t>& idx) {
          const auto ga = detail::graph_for(ra.points->subset(idx), cfg);
          const auto gb = detail::graph_for(rb.points->subset(idx), cfg);
          return curvature_w1(orc_all(ga, cfg.alpha), orc_all(gb, cfg.alpha));
        };
        auto heat_closure = [&](const std::vector<std::size_t>& idx) {
          const auto ga = detail::graph_for(ra.points->subset(idx), cfg);
          const auto gb = detail::graph_for(rb.points->subset(idx), cfg);
          std::vector<double> fa, fb;
          if (cfg.heat_channel == WeightChannel::FlowWeights) {
            fa = run_flow(ga, flow_opts).weights;
            fb = run_flow(gb, flow_opts).weights;
          }
          return heat_distance(HeatOperand{ga, fa}, HeatOperand{gb, fb}, LaplacianSpec{cfg.heat_channel},
                               cfg.t_grid)
              .value;
        };
        const auto sub_ws1 = subsample_protocol(ws1_closure, n_total, n_subset, cfg.n_iter, pair_seed);
        const auto sub_heat = subsample_protocol(heat_closure, n_total, n_subset, cfg.n_iter, pair_seed);
        pj["subsample"] = {{"ws1", subsample_to_json(sub_ws1)}, {"heat", subsample_to_json(sub_heat)}};
        out.json("pairs/" + pair + ".json", pj, config_hash, cfg.seed);
      });
      report.results["pairs"].push_back(pj);
    }
  if (reps.size() > 1) {
    out.matrix_csv("ws1_distance.csv", names, ws1_m);
    out.matrix_csv("heat_distance.csv", names, heat_m);
  }

  Json errors = Json::array();
  for (const auto& e : result.errors)
    errors.push_back({{"stage", e.stage}, {"input", e.input}, {"kind", e.kind}, {"message", e.message}});
  report.results["errors"] = errors;
  out.json("report.json", report.to_json(), config_hash, cfg.seed);

  // Manifest last: every file with its content hash.
  Json files = Json::array();
  std::vector<std::string> sorted = out.files();
  std::sort(sorted.begin(), sorted.end());
  for (const auto& rel : sorted)
    files.push_back({{"path", rel}, {"fnv1a64", hex64(fnv1a(read_text_file((out.root() / rel).string())))}});
  out.json("manifest.json", {{"files", files}, {"ok", result.ok()}, {"tool_version", kToolVersion}},
           config_hash, cfg.seed);
  result.files = out.files();
  return result;
}

}  // namespace curvalign
