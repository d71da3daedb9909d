#include <gtest/gtest.h>

#include "curvalign/rdm.hpp"
#include "test_util.hpp"

using namespace curvalign;

namespace {

Rdm random_rdm(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DistanceMatrix d{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)),
                   MetricSpec::euclidean()};
  for (Eigen::Index i = 0; i < d.values.rows(); ++i)
    for (Eigen::Index j = i + 1; j < d.values.cols(); ++j) d.values(i, j) = d.values(j, i) = u(rng);
  std::vector<std::string> items;
  for (std::size_t i = 0; i < n; ++i) items.push_back("s" + std::to_string(i));
  return make_rdm(items, d);
}

Rdm affine(const Rdm& a, double scale, double shift) {
  Rdm b = a;
  b.values = (a.values.array() * scale + shift).matrix();
  b.values.diagonal().setZero();
  return b;
}

}  // namespace

TEST(BuildRdm, Examples) {
  PointSet ps;
  ps.items = {"a", "b", "c"};
  ps.payload.resize(3, 2);
  ps.payload << 1, 2, 1, 2, 4, -1;
  const auto r = build_rdm(ps, MetricSpec::euclidean());
  EXPECT_EQ(r.values(0, 1), 0.0);
  EXPECT_TRUE(build_rdm(ps, MetricSpec::minkowski(2.0)).values == r.values);

  const auto p3 = testutil::unit_graph(3, {{0, 1}, {1, 2}});
  EXPECT_EQ(build_rdm(p3).values(0, 2), 2.0);
  EXPECT_EQ(build_rdm(p3).tag(), "shortest_path");
  EXPECT_THROW(build_rdm(ps, MetricSpec::shortest_path()), MetricUnavailable);

  PointSet sim;
  sim.kind = PointSetKind::Similarity;
  sim.items = {"a", "b"};
  sim.payload = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(build_rdm(sim, MetricSpec::cosine()), MetricUnavailable);
}

TEST(RsaScore, SelfAndAffine) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const auto a = random_rdm(rng, 15);
    EXPECT_EQ(rsa_score(a, a).r, 1.0);
    const Rdm copy = a;
    EXPECT_EQ(rsa_score(a, copy).r, 1.0);
    EXPECT_NEAR(rsa_score(a, affine(a, 2.0, 3.0)).r, 1.0, 1e-12);
    EXPECT_NEAR(rsa_score(a, affine(a, -0.5, 9.0)).r, -1.0, 1e-12);
  }
}

TEST(RsaScore, NullDistribution) {
  std::mt19937_64 rng(2);
  int small = 0;
  for (int rep = 0; rep < 100; ++rep) small += std::abs(rsa_score(random_rdm(rng, 100), random_rdm(rng, 100)).r) < 0.1;
  EXPECT_GE(small, 95);
}

TEST(RsaScore, Errors) {
  std::mt19937_64 rng(3);
  const auto a = random_rdm(rng, 6);
  auto b = a;
  b.items[0] = "other";
  EXPECT_THROW(rsa_score(a, b), NodeSetMismatch);
  auto flat = a;
  flat.values.setConstant(1.0);
  flat.values.diagonal().setZero();
  EXPECT_THROW(rsa_score(a, flat), ZeroVariance);
  EXPECT_THROW(rsa_score(flat, flat), ZeroVariance);
}

TEST(ProfileAnalysis, SelfIsOne) {
  std::mt19937_64 rng(4);
  const auto a = random_rdm(rng, 12);
  for (const auto& r : profile_analysis(a, a)) EXPECT_EQ(r.value(), 1.0);
}

TEST(ProfileAnalysis, RelabelingInvariance) {
  std::mt19937_64 rng(5);
  const auto a = random_rdm(rng, 10), b = random_rdm(rng, 10);
  std::vector<Eigen::Index> perm(10);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  auto permute = [&](const Rdm& r) {
    Rdm p = r;
    for (Eigen::Index i = 0; i < 10; ++i) {
      p.items[static_cast<std::size_t>(i)] = r.items[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
      for (Eigen::Index j = 0; j < 10; ++j)
        p.values(i, j) = r.values(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    return p;
  };
  std::vector<double> r1, r2;
  for (const auto& r : profile_analysis(a, b)) r1.push_back(*r);
  for (const auto& r : profile_analysis(permute(a), permute(b))) r2.push_back(*r);
  std::sort(r1.begin(), r1.end());
  std::sort(r2.begin(), r2.end());
  for (std::size_t i = 0; i < r1.size(); ++i) EXPECT_NEAR(r1[i], r2[i], 1e-12);
}

TEST(ProfileAnalysis, PreservedBlockScoresHigher) {
  // Two blocks of 8; b keeps block A's geometry and scrambles block B's rows.
  std::mt19937_64 rng(6);
  const auto a = random_rdm(rng, 16);
  Rdm b = a;
  const auto noise = random_rdm(rng, 16);
  for (Eigen::Index i = 8; i < 16; ++i)
    for (Eigen::Index j = 0; j < 16; ++j)
      if (i != j) b.values(i, j) = b.values(j, i) = noise.values(i, j);
  const auto r = profile_analysis(a, b);
  double preserved = 0.0, scrambled = 0.0;
  for (std::size_t i = 0; i < 8; ++i) preserved += *r[i];
  for (std::size_t i = 8; i < 16; ++i) scrambled += *r[i];
  EXPECT_GT(preserved, scrambled);
}

TEST(ProfileAnalysis, ZeroVarianceRowIsUndefined) {
  std::mt19937_64 rng(7);
  const auto a = random_rdm(rng, 6);
  auto b = a;
  for (Eigen::Index j = 1; j < 6; ++j) b.values(0, j) = b.values(j, 0) = 2.0;
  const auto r = profile_analysis(a, b);
  EXPECT_FALSE(r[0].has_value());
  EXPECT_TRUE(r[1].has_value());
}

TEST(AlignmentMatrix, Shape) {
  std::mt19937_64 rng(8);
  const auto a = random_rdm(rng, 10), b = random_rdm(rng, 10);
  EXPECT_TRUE(alignment_matrix({a}) == Eigen::MatrixXd::Ones(1, 1));
  const auto m = alignment_matrix({a, b, affine(a, 3.0, 1.0)});
  EXPECT_TRUE(m == m.transpose());
  EXPECT_NEAR(m(0, 2), 1.0, 1e-12);
  EXPECT_EQ(m(1, 1), 1.0);
}
