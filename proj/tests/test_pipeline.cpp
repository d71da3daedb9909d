#include <gtest/gtest.h>

#include "curvalign/pipeline.hpp"
#include "test_util.hpp"

using namespace curvalign;

namespace {

RunConfig small_config(const testutil::TempDir& dir, const std::string& out) {
  SynthSpec s;
  s.n_points = 40;
  s.seed = 3;
  save_pointset(generate_points(s), dir.path("torus.csv"));
  s.transform = SynthTransform::Sigmoid;
  save_pointset(generate_points(s), dir.path("torus_sig.csv"));
  RunConfig cfg;
  cfg.inputs = {{"base", dir.path("torus.csv"), PointSetKind::Embeddings},
                {"sig", dir.path("torus_sig.csv"), PointSetKind::Embeddings}};
  cfg.flow_iterations = 5;
  cfg.n_subset = 30;
  cfg.n_iter = 3;
  cfg.seed = 11;
  cfg.output_dir = dir.path(out);
  return cfg;
}

}  // namespace

TEST(Pipeline, IdenticalInputsCompareAsEqual) {
  testutil::TempDir dir("pipe");
  auto cfg = small_config(dir, "out");
  cfg.inputs[1].path = cfg.inputs[0].path;
  const auto result = run_pipeline(cfg);
  ASSERT_TRUE(result.ok()) << result.errors.front().message;
  const auto& pair = result.report.results.at("pairs").at(0);
  EXPECT_EQ(pair.at("ws1").get<double>(), 0.0);
  EXPECT_EQ(pair.at("heat").at("value").get<double>(), 0.0);
  const auto a = load_pointset(dir.path("out/alignment_matrix.csv"), PointSetKind::Similarity);
  const auto& labels = result.report.results.at("alignment").at("labels");
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = 0; j < labels.size(); ++j) {
      const auto li = labels[i].get<std::string>(), lj = labels[j].get<std::string>();
      if (li.substr(li.find(':')) == lj.substr(lj.find(':'))) {
        EXPECT_EQ(a.payload(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 1.0) << li << " " << lj;
      }
    }
}

TEST(Pipeline, RerunIsByteIdentical) {
  testutil::TempDir dir("pipe");
  auto cfg = small_config(dir, "a");
  const auto first = run_pipeline(cfg);
  cfg.output_dir = dir.path("b");
  const auto second = run_pipeline(cfg);
  ASSERT_TRUE(first.ok());
  EXPECT_EQ(first.files, second.files);
  for (const auto& f : first.files)
    EXPECT_EQ(read_text_file(dir.path("a/" + f)), read_text_file(dir.path("b/" + f))) << f;
}

TEST(Pipeline, EveryFileNamesHashAndSeed) {
  testutil::TempDir dir("pipe");
  const auto cfg = small_config(dir, "out");
  const auto result = run_pipeline(cfg);
  const std::string hash = cfg.hash();
  for (const auto& f : result.files) {
    const auto text = read_text_file(dir.path("out/" + f));
    EXPECT_NE(text.find(hash), std::string::npos) << f;
    EXPECT_NE(text.find("11"), std::string::npos) << f;
  }
  const auto manifest = load_json(dir.path("out/manifest.json"));
  EXPECT_EQ(manifest.at("config_hash"), hash);
  EXPECT_EQ(manifest.at("files").size(), result.files.size() - 1);
}

TEST(Pipeline, StageErrorsAreCollected) {
  testutil::TempDir dir("pipe");
  auto cfg = small_config(dir, "out");
  cfg.inputs.push_back({"broken", dir.file("broken.csv", "id,a\nx,1\ny,oops\n"), PointSetKind::Embeddings});
  const auto result = run_pipeline(cfg);
  EXPECT_FALSE(result.ok());
  bool saw_ingest = false;
  for (const auto& e : result.errors)
    if (e.stage == "ingest" && e.input == "broken") saw_ingest = e.kind == "ParseError";
  EXPECT_TRUE(saw_ingest);
  // The healthy pair is still compared.
  bool compared = false;
  for (const auto& p : result.report.results.at("pairs"))
    compared |= p.at("pair") == Json::array({"base", "sig"}) && p.contains("ws1");
  EXPECT_TRUE(compared);
  EXPECT_EQ(load_json(dir.path("out/manifest.json")).at("ok"), false);
}

TEST(RunConfig, JsonRoundTripAndValidation) {
  RunConfig cfg;
  cfg.inputs = {{"x", "x.csv", PointSetKind::Similarity}};
  cfg.knn_sweep = {{10, 20}};
  cfg.seed = 99;
  cfg.communities = ThresholdStrategy::fixed(1.5);
  const auto back = RunConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.hash(), cfg.hash());
  EXPECT_EQ(back.inputs[0].kind, PointSetKind::Similarity);
  EXPECT_EQ(back.communities.value, 1.5);

  RunConfig changed = cfg;
  changed.seed = 100;
  EXPECT_NE(changed.hash(), cfg.hash());

  RunConfig bad = cfg;
  bad.inputs.push_back(cfg.inputs[0]);
  EXPECT_THROW(bad.validate(), ValidationError);
  EXPECT_THROW(RunConfig{}.validate(), ValidationError);
  EXPECT_THROW(RunConfig::from_json(Json{{"inputs", Json::array()}}), ParseError);
}
