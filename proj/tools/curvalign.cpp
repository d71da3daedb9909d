// curvalign command line front end.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "curvalign/pipeline.hpp"

namespace ca = curvalign;

namespace {

struct GraphArgs {
  std::string input;
  std::string kind = "embeddings";
  std::string metric = "euclidean";
  std::size_t k_min = 5;
  std::size_t k_max = 10;
  std::string kernel = "mean";
};

void add_input_options(CLI::App* cmd, GraphArgs& a) {
  cmd->add_option("-i,--input", a.input, "CSV file of embeddings or a similarity matrix")->required();
  cmd->add_option("--kind", a.kind, "embeddings | similarity")->capture_default_str();
}

void add_graph_options(CLI::App* cmd, GraphArgs& a) {
  add_input_options(cmd, a);
  cmd->add_option("--metric", a.metric, "euclidean | cosine | minkowski:<p>")->capture_default_str();
  cmd->add_option("--k-min", a.k_min)->capture_default_str();
  cmd->add_option("--k-max", a.k_max)->capture_default_str();
  cmd->add_option("--density-kernel", a.kernel, "mean | kth")->capture_default_str();
}

ca::PointSet load(const GraphArgs& a) { return ca::load_pointset(a.input, ca::parse_pointset_kind(a.kind)); }

ca::WeightedGraph graph_from(const GraphArgs& a, const ca::PointSet& ps) {
  const auto metric = ps.kind == ca::PointSetKind::Similarity ? ca::MetricSpec::from_similarity()
                                                               : ca::parse_metric(a.metric);
  ca::AdaptiveKnnParams p{a.k_min, a.k_max, ca::parse_density_kernel(a.kernel)};
  return ca::build_graph(ca::to_distance(ps, metric), p, ps.items);
}

// Final weights from a flow JSON file, matched to the graph's edges.
std::vector<double> flow_weights_from_json(const ca::Json& j, const ca::WeightedGraph& g) {
  std::vector<double> w(g.num_edges(), 0.0);
  std::size_t seen = 0;
  for (const auto& e : j.at("final_weights")) {
    const auto idx = g.find_edge(e.at("u").get<std::size_t>(), e.at("v").get<std::size_t>());
    if (!idx) throw ca::NodeSetMismatch("flow file has an edge the graph does not");
    w[*idx] = e.at("weight").get<double>();
    ++seen;
  }
  if (seen != g.num_edges()) throw ca::NodeSetMismatch("flow file does not cover every edge");
  return w;
}

void emit(const ca::Json& j, const std::string& out) {
  if (out.empty() || out == "-")
    std::cout << ca::dump_canonical(j);
  else
    ca::save_json(j, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curvature-based comparison of representational geometries"};
  app.set_version_flag("--version", ca::kToolVersion);
  app.require_subcommand(1);

  std::string out;
  double alpha = ca::kDefaultAlpha;
  std::size_t iterations = 30;
  bool normalize = false;
  std::uint64_t seed = 0;

  // ingest
  GraphArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Validate an input file and write a normalized copy");
  add_input_options(ingest, ingest_args);
  ingest->add_option("-o,--out", out, "normalized CSV (summary to stdout if omitted)");

  // graph
  GraphArgs graph_args;
  auto* graph = app.add_subcommand("graph", "Build the adaptive kNN graph");
  add_graph_options(graph, graph_args);
  graph->add_option("-o,--out", out, "graph JSON (stdout if omitted)");

  // curvature
  std::string graph_path;
  auto* curvature = app.add_subcommand("curvature", "Ollivier-Ricci curvature of every edge");
  curvature->add_option("-g,--graph", graph_path, "graph JSON")->required();
  curvature->add_option("--alpha", alpha, "laziness")->capture_default_str();
  curvature->add_option("-o,--out", out);

  // flow
  auto* flow = app.add_subcommand("flow", "Run discrete Ricci flow");
  flow->add_option("-g,--graph", graph_path, "graph JSON")->required();
  flow->add_option("--alpha", alpha)->capture_default_str();
  flow->add_option("--iterations", iterations)->capture_default_str();
  flow->add_flag("--normalize", normalize, "keep total weight equal to the edge count");
  flow->add_option("-o,--out", out);

  // communities
  std::string flow_path;
  std::optional<double> threshold;
  auto* communities = app.add_subcommand("communities", "Cut flowed edges into communities");
  communities->add_option("-g,--graph", graph_path, "graph JSON")->required();
  communities->add_option("-f,--flow", flow_path, "flow JSON")->required();
  communities->add_option("--threshold", threshold, "fixed cut; modularity scan if omitted");
  communities->add_option("-o,--out", out);

  // rdm
  GraphArgs rdm_args;
  std::string rdm_metric = "euclidean";
  auto* rdm = app.add_subcommand("rdm", "Representational dissimilarity matrix as CSV");
  add_graph_options(rdm, rdm_args);
  rdm->add_option("--rdm-metric", rdm_metric,
                  "euclidean | cosine | minkowski:<p> | shortest_path | flow_metric")
      ->capture_default_str();
  rdm->add_option("--alpha", alpha)->capture_default_str();
  rdm->add_option("--iterations", iterations)->capture_default_str();
  rdm->add_option("-o,--out", out)->required();

  // compare
  GraphArgs cmp_a, cmp_b;
  std::string channel = "flow";
  std::size_t bins = 20, n_subset = 70, n_iter = 100;
  bool subsample = false;
  auto* compare = app.add_subcommand("compare", "Compare two representations of the same items");
  compare->add_option("-a", cmp_a.input, "first input")->required();
  compare->add_option("-b", cmp_b.input, "second input")->required();
  compare->add_option("--kind-a", cmp_a.kind)->capture_default_str();
  compare->add_option("--kind-b", cmp_b.kind)->capture_default_str();
  compare->add_option("--metric", cmp_a.metric)->capture_default_str();
  compare->add_option("--k-min", cmp_a.k_min)->capture_default_str();
  compare->add_option("--k-max", cmp_a.k_max)->capture_default_str();
  compare->add_option("--alpha", alpha)->capture_default_str();
  compare->add_option("--iterations", iterations)->capture_default_str();
  compare->add_option("--heat-channel", channel, "unit | construction | flow")->capture_default_str();
  compare->add_option("--kld-bins", bins)->capture_default_str();
  compare->add_flag("--subsample", subsample, "add subset mean/std of WS1 (needs --seed)");
  compare->add_option("--n-subset", n_subset)->capture_default_str();
  compare->add_option("--n-iter", n_iter)->capture_default_str();
  compare->add_option("--seed", seed);
  compare->add_option("-o,--out", out);

  // gmm
  std::string curvature_path;
  std::size_t k_max = 5, restarts = 5;
  auto* gmm = app.add_subcommand("gmm", "Fit Gaussian mixtures to curvature values");
  gmm->add_option("-c,--curvature", curvature_path, "curvature JSON")->required();
  gmm->add_option("--k-max", k_max)->capture_default_str();
  gmm->add_option("--restarts", restarts)->capture_default_str();
  gmm->add_option("--seed", seed)->required();
  gmm->add_option("-o,--out", out);

  // synth
  std::string family = "torus", transform = "none";
  std::size_t n_points = 200;
  std::vector<std::size_t> blocks{30, 30};
  double p_in = 0.5, p_out = 0.02;
  bool family_check = false;
  auto* synth = app.add_subcommand("synth", "Generate synthetic data or run the family check");
  synth->add_option("--family", family, "torus | swiss_roll | sbm")->capture_default_str();
  synth->add_option("--transform", transform, "none | sigmoid")->capture_default_str();
  synth->add_option("-n,--n-points", n_points)->capture_default_str();
  synth->add_option("--blocks", blocks, "SBM block sizes")->capture_default_str();
  synth->add_option("--p-in", p_in)->capture_default_str();
  synth->add_option("--p-out", p_out)->capture_default_str();
  synth->add_flag("--family-check", family_check,
                  "heat distances for torus/swiss roll and their sigmoid copies");
  synth->add_option("--seed", seed)->required();
  synth->add_option("-o,--out", out, "CSV for points, JSON for graphs and the check");

  // pipeline
  std::string config_path;
  std::vector<std::string> inputs;
  ca::RunConfig cfg;
  std::vector<std::string> sweep;
  std::string p_channel = "flow";
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage and write a manifest");
  pipeline->add_option("--config", config_path, "RunConfig JSON; flags given explicitly override it");
  pipeline->add_option("--input", inputs, "name=path[:similarity]");
  pipeline->add_option("--k-min", cfg.knn.k_min)->capture_default_str();
  pipeline->add_option("--k-max", cfg.knn.k_max)->capture_default_str();
  pipeline->add_option("--k-sweep", sweep, "extra grids as kmin,kmax (e.g. 10,20)");
  pipeline->add_option("--alpha", cfg.alpha)->capture_default_str();
  pipeline->add_option("--iterations", cfg.flow_iterations)->capture_default_str();
  pipeline->add_flag("--normalize", cfg.normalize_flow);
  pipeline->add_option("--heat-channel", p_channel)->capture_default_str();
  pipeline->add_option("--n-subset", cfg.n_subset)->capture_default_str();
  pipeline->add_option("--n-iter", cfg.n_iter)->capture_default_str();
  pipeline->add_option("--gmm-k-max", cfg.gmm_k_max)->capture_default_str();
  pipeline->add_option("--kld-bins", cfg.kld_bins)->capture_default_str();
  pipeline->add_option("--seed", cfg.seed);
  pipeline->add_option("-o,--out", cfg.output_dir)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      const auto ps = load(ingest_args);
      if (!out.empty()) ca::save_pointset(ps, out);
      emit({{"n_items", ps.size()},
            {"kind", ca::to_string(ps.kind)},
            {"dimensions", ps.payload.cols()}},
           "");
    } else if (graph->parsed()) {
      emit(ca::graph_to_json(graph_from(graph_args, load(graph_args))), out);
    } else if (curvature->parsed()) {
      const auto g = ca::graph_from_json(ca::load_json(graph_path));
      emit(ca::curvature_to_json(ca::orc_all(g, alpha)), out);
    } else if (flow->parsed()) {
      const auto g = ca::graph_from_json(ca::load_json(graph_path));
      emit(ca::flow_to_json(ca::run_flow(g, {iterations, alpha, normalize}), g), out);
    } else if (communities->parsed()) {
      const auto g = ca::graph_from_json(ca::load_json(graph_path));
      const auto w = flow_weights_from_json(ca::load_json(flow_path), g);
      const auto strategy =
          threshold ? ca::ThresholdStrategy::fixed(*threshold) : ca::ThresholdStrategy::modularity_scan();
      const auto c = ca::detect_communities(g, w, strategy);
      emit(ca::communities_to_json(c, ca::community_metrics(g, c.labels), g), out);
    } else if (rdm->parsed()) {
      const auto ps = load(rdm_args);
      const auto m = ca::parse_metric(rdm_metric);
      ca::Rdm r;
      if (m.is_vector_metric()) {
        r = ca::build_rdm(ps, m);
      } else {
        const auto g = graph_from(rdm_args, ps);
        r = m.kind == ca::MetricKind::FlowMetric ? ca::build_rdm(g, ca::run_flow(g, {iterations, alpha}))
                                                 : ca::build_rdm(g);
      }
      ca::write_matrix_csv(out, r.items, r.values);
    } else if (compare->parsed()) {
      if (subsample && compare->count("--seed") == 0) throw CLI::RequiredError("--seed (with --subsample)");
      cmp_b.metric = cmp_a.metric;
      cmp_b.k_min = cmp_a.k_min;
      cmp_b.k_max = cmp_a.k_max;
      const auto pa = load(cmp_a), pb = load(cmp_b);
      const auto ga = graph_from(cmp_a, pa), gb = graph_from(cmp_b, pb);
      const ca::FlowOptions fo{iterations, alpha};
      const auto ka = ca::orc_all(ga, alpha), kb = ca::orc_all(gb, alpha);
      const auto fa = ca::run_flow(ga, fo), fb = ca::run_flow(gb, fo);
      const auto ch = ca::parse_weight_channel(channel);
      const auto heat = ca::heat_distance({ga, fa.weights}, {gb, fb.weights}, {ch}, ca::default_t_grid());
      ca::Json j = {{"ws1", ca::curvature_w1(ka, kb)},
                    {"kld", ca::curvature_kld(ka, kb, bins)},
                    {"heat", {{"value", heat.value}, {"t_star", heat.t_star}, {"channel", channel}}},
                    {"rsa_shortest_path", ca::rsa_score(ca::build_rdm(ga), ca::build_rdm(gb)).r},
                    {"rsa_flow_metric", ca::rsa_score(ca::build_rdm(ga, fa), ca::build_rdm(gb, fb)).r}};
      if (subsample) {
        const auto r = ca::subsample_protocol(
            [&](const std::vector<std::size_t>& idx) {
              return ca::curvature_w1(ca::orc_all(graph_from(cmp_a, pa.subset(idx)), alpha),
                                      ca::orc_all(graph_from(cmp_b, pb.subset(idx)), alpha));
            },
            pa.size(), std::min(n_subset, pa.size()), n_iter, seed);
        j["subsample_ws1"] = ca::subsample_to_json(r);
      }
      emit(j, out);
    } else if (gmm->parsed()) {
      const auto c = ca::curvature_from_json(ca::load_json(curvature_path));
      const auto sel = ca::select_gmm(c.values(), k_max, seed, restarts);
      ca::Json j = ca::gmm_to_json(sel.best);
      ca::Json cands = ca::Json::array();
      for (const auto& f : sel.candidates) cands.push_back(ca::gmm_to_json(f));
      j["candidates"] = cands;
      emit(j, out);
    } else if (synth->parsed()) {
      if (family_check) {
        try {
          emit(ca::family_distance_check(ca::standard_family_specs(n_points, seed)).to_json(), out);
        } catch (const ca::CheckFailed& e) {
          emit(e.report().to_json(), out);
          std::cerr << "error: " << e.what() << '\n';
          return 1;
        }
      } else {
        ca::SynthSpec s;
        s.family = ca::parse_synth_family(family);
        s.transform = transform == "sigmoid" ? ca::SynthTransform::Sigmoid : ca::SynthTransform::None;
        if (transform != "none" && transform != "sigmoid") throw ca::InvalidSpec("unknown transform " + transform);
        s.n_points = n_points;
        s.block_sizes = blocks;
        s.p_in = p_in;
        s.p_out = p_out;
        s.seed = seed;
        const auto result = ca::generate(s);
        if (const auto* ps = std::get_if<ca::PointSet>(&result)) {
          if (out.empty()) throw ca::ValidationError("--out is required for point sets");
          ca::save_pointset(*ps, out);
        } else {
          const auto& sbm = std::get<ca::SbmGraph>(result);
          ca::Json j = ca::graph_to_json(sbm.graph);
          j["blocks"] = sbm.blocks;
          emit(j, out);
        }
      }
    } else if (pipeline->parsed()) {
      ca::RunConfig base;
      if (!config_path.empty()) {
        base = ca::RunConfig::from_json(ca::load_json(config_path));
      } else if (pipeline->count("--seed") == 0) {
        throw CLI::RequiredError("--seed");
      }
      auto given = [&](const char* flag) { return pipeline->count(flag) > 0; };
      if (given("--k-min")) base.knn.k_min = cfg.knn.k_min;
      if (given("--k-max")) base.knn.k_max = cfg.knn.k_max;
      if (given("--alpha")) base.alpha = cfg.alpha;
      if (given("--iterations")) base.flow_iterations = cfg.flow_iterations;
      if (given("--normalize")) base.normalize_flow = cfg.normalize_flow;
      if (given("--heat-channel")) base.heat_channel = ca::parse_weight_channel(p_channel);
      if (given("--n-subset")) base.n_subset = cfg.n_subset;
      if (given("--n-iter")) base.n_iter = cfg.n_iter;
      if (given("--gmm-k-max")) base.gmm_k_max = cfg.gmm_k_max;
      if (given("--kld-bins")) base.kld_bins = cfg.kld_bins;
      if (given("--seed")) base.seed = cfg.seed;
      if (given("--out") || config_path.empty()) base.output_dir = cfg.output_dir;
      for (const auto& g : sweep) {
        const auto comma = g.find(',');
        if (comma == std::string::npos) throw ca::ValidationError("--k-sweep expects kmin,kmax");
        base.knn_sweep.emplace_back(std::stoul(g.substr(0, comma)), std::stoul(g.substr(comma + 1)));
      }
      for (const auto& spec : inputs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw ca::ValidationError("--input expects name=path[:similarity]");
        ca::InputSpec in{spec.substr(0, eq), spec.substr(eq + 1), ca::PointSetKind::Embeddings};
        const auto colon = in.path.rfind(':');
        if (colon != std::string::npos && (in.path.substr(colon + 1) == "similarity" ||
                                           in.path.substr(colon + 1) == "embeddings")) {
          in.kind = ca::parse_pointset_kind(in.path.substr(colon + 1));
          in.path.resize(colon);
        }
        base.inputs.push_back(in);
      }
      const auto result = ca::run_pipeline(base);
      for (const auto& e : result.errors)
        std::cerr << "error: [" << e.stage << "] " << e.input << ": " << e.kind << ": " << e.message << '\n';
      std::cout << base.output_dir << "/manifest.json\n";
      return result.ok() ? 0 : 1;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const ca::Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
