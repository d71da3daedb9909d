#include <gtest/gtest.h>

#include "curvalign/io.hpp"
#include "curvalign/report.hpp"
#include "test_util.hpp"

using namespace curvalign;

TEST(LoadPointset, EmbeddingsReadBack) {
  testutil::TempDir dir("io");
  const auto path = dir.file("e.csv", "id,a,b,c,d\nx,1,2,3,4\ny,5,6,7,8\nz,0,0,0,1.5\n");
  const auto ps = load_pointset(path, PointSetKind::Embeddings);
  EXPECT_EQ(ps.size(), 3u);
  EXPECT_EQ(ps.payload.cols(), 4);
  EXPECT_EQ(ps.kind, PointSetKind::Embeddings);
  EXPECT_EQ(ps.items[2], "z");
  EXPECT_DOUBLE_EQ(ps.payload(2, 3), 1.5);
}

TEST(LoadPointset, SimilarityReadBack) {
  testutil::TempDir dir("io");
  const auto path = dir.file("s.csv", "id,a,b\na,1,0.5\nb,0.5,1\n");
  const auto ps = load_pointset(path, PointSetKind::Similarity);
  EXPECT_EQ(ps.size(), 2u);
  EXPECT_EQ(ps.kind, PointSetKind::Similarity);
}

TEST(LoadPointset, AsymmetricSimilarityRejected) {
  testutil::TempDir dir("io");
  const auto path = dir.file("s.csv", "id,a,b\na,1,0.5\nb,0.6,1\n");
  EXPECT_THROW(load_pointset(path, PointSetKind::Similarity), ValidationError);
}

TEST(LoadPointset, MalformedInputs) {
  testutil::TempDir dir("io");
  EXPECT_THROW(load_pointset(dir.file("r.csv", "id,a,b\nx,1\ny,1,2\n"), PointSetKind::Embeddings), ParseError);
  EXPECT_THROW(load_pointset(dir.file("n.csv", "id,a\nx,1\ny,abc\n"), PointSetKind::Embeddings), ParseError);
  EXPECT_THROW(load_pointset(dir.file("f.csv", "id,a\nx,1\ny,inf\n"), PointSetKind::Embeddings),
               Error);
  EXPECT_THROW(load_pointset(dir.file("one.csv", "id,a\nx,1\n"), PointSetKind::Embeddings), ValidationError);
  EXPECT_THROW(load_pointset(dir.path("missing.csv"), PointSetKind::Embeddings), IoError);
  EXPECT_THROW(load_pointset(dir.file("h.csv", "id,a,c\na,1,0\nb,0,1\n"), PointSetKind::Similarity),
               ValidationError);
}

TEST(LoadPointset, CommentsAndQuotedIds) {
  testutil::TempDir dir("io");
  const auto path = dir.file("q.csv", "# produced elsewhere\nid,a\n\"cat, big\",1\ndog,2\n");
  const auto ps = load_pointset(path, PointSetKind::Embeddings);
  EXPECT_EQ(ps.items[0], "cat, big");
}

TEST(LoadPointset, SaveRoundTripIsExact) {
  testutil::TempDir dir("io");
  PointSet ps;
  ps.items = {"a", "b,c", "d"};
  ps.payload.resize(3, 2);
  ps.payload << 0.1, 1.0 / 3.0, -2.5e-17, 7.0, 1e300, -0.0;
  save_pointset(ps, dir.path("p.csv"));
  const auto back = load_pointset(dir.path("p.csv"), PointSetKind::Embeddings);
  EXPECT_EQ(back.items, ps.items);
  EXPECT_TRUE(back.payload == ps.payload);
}

TEST(ToDistance, Examples) {
  PointSet e;
  e.items = {"x", "y"};
  e.payload.resize(2, 2);
  e.payload << 0, 0, 3, 4;
  EXPECT_DOUBLE_EQ(to_distance(e, MetricSpec::euclidean())(0, 1), 5.0);

  PointSet s;
  s.kind = PointSetKind::Similarity;
  s.items = {"x", "y"};
  s.payload.resize(2, 2);
  s.payload << 1, 0.5, 0.5, 1;
  EXPECT_DOUBLE_EQ(to_distance(s, MetricSpec::from_similarity())(0, 1), 0.5);
  EXPECT_THROW(to_distance(s, MetricSpec::cosine()), MetricUnavailable);

  PointSet c;
  c.items = {"x", "y"};
  c.payload.resize(2, 2);
  c.payload << 1, 0, 0, 1;
  EXPECT_DOUBLE_EQ(to_distance(c, MetricSpec::cosine())(0, 1), 1.0);
}

TEST(ToDistance, Errors) {
  PointSet z;
  z.items = {"x", "y"};
  z.payload.resize(2, 2);
  z.payload << 0, 0, 1, 1;
  EXPECT_THROW(to_distance(z, MetricSpec::cosine()), DegenerateInput);
  EXPECT_THROW(to_distance(z, MetricSpec::minkowski(0.5)), InvalidMetric);
  EXPECT_THROW(to_distance(z, MetricSpec::from_similarity()), MetricUnavailable);
}

TEST(ToDistance, OutputIsSymmetricWithZeroDiagonal) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  PointSet ps;
  for (int i = 0; i < 12; ++i) ps.items.push_back("p" + std::to_string(i));
  ps.payload = Eigen::MatrixXd::NullaryExpr(12, 4, [&] { return nd(rng); });
  for (const auto& m : {MetricSpec::euclidean(), MetricSpec::cosine(), MetricSpec::minkowski(3.0)}) {
    const auto d = to_distance(ps, m);
    for (std::size_t i = 0; i < 12; ++i) {
      EXPECT_EQ(d(i, i), 0.0);
      for (std::size_t j = 0; j < 12; ++j) {
        EXPECT_EQ(d(i, j), d(j, i));
        EXPECT_GE(d(i, j), 0.0);
      }
    }
  }
}

TEST(MetricSpec, ParseRoundTrip) {
  for (const auto& m : {MetricSpec::euclidean(), MetricSpec::cosine(), MetricSpec::minkowski(3.0),
                        MetricSpec::minkowski(1.5), MetricSpec::shortest_path(), MetricSpec::flow_metric(),
                        MetricSpec::from_similarity()})
    EXPECT_EQ(parse_metric(to_string(m)), m);
  EXPECT_EQ(parse_metric("minkowski:4"), MetricSpec::minkowski(4.0));
  EXPECT_THROW(parse_metric("manhattan"), InvalidMetric);
  EXPECT_THROW(parse_metric("minkowski:x"), InvalidMetric);
}

TEST(Report, SavedTwiceIsByteIdentical) {
  testutil::TempDir dir("report");
  AnalysisReport r;
  r.provenance = {{"seed", 7}, {"tool_version", kToolVersion}};
  r.results = {{"w", 0.1 + 0.2}, {"list", {3, 1, 2}}, {"name", "x"}};
  save_report(r, dir.path("a.json"));
  save_report(r, dir.path("b.json"));
  EXPECT_EQ(read_text_file(dir.path("a.json")), read_text_file(dir.path("b.json")));
}

TEST(Report, EmptyAnalysisHasProvenanceOnly) {
  testutil::TempDir dir("report");
  AnalysisReport r;
  r.provenance = {{"seed", 1}};
  save_report(r, dir.path("e.json"));
  const auto j = load_json(dir.path("e.json"));
  EXPECT_EQ(j.at("provenance").at("seed"), 1);
  EXPECT_TRUE(j.at("results").empty());
}

TEST(Report, RoundTrip) {
  testutil::TempDir dir("report");
  AnalysisReport r;
  r.provenance = {{"seed", 3}, {"config", {{"alpha", 0.5}}}};
  r.results = {{"kappa", {0.25, -0.125}}, {"ok", true}};
  save_report(r, dir.path("r.json"));
  EXPECT_EQ(load_report(dir.path("r.json")), r);
  EXPECT_THROW(load_report(dir.file("bad.json", "{\"results\":{}}")), ParseError);
  EXPECT_THROW(load_report(dir.file("broken.json", "{")), ParseError);
}

TEST(Report, CanonicalizeRoundsAndNullsNonFinite) {
  const Json j = {{"a", 0.1 + 0.2}, {"b", std::numeric_limits<double>::infinity()}};
  const Json c = canonicalize(j);
  EXPECT_EQ(c.at("a").get<double>(), 0.3);
  EXPECT_TRUE(c.at("b").is_null());
}
