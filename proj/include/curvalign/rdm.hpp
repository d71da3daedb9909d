#pragma once

// Representational dissimilarity matrices and their comparison.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "curvalign/error.hpp"
#include "curvalign/graph.hpp"
#include "curvalign/io.hpp"
#include "curvalign/ricci_flow.hpp"

namespace curvalign {

struct Rdm {
  std::vector<std::string> items;
  Eigen::MatrixXd values;
  MetricSpec metric;

  std::size_t size() const { return items.size(); }
  std::string tag() const { return to_string(metric); }
};

inline Rdm make_rdm(std::vector<std::string> items, const DistanceMatrix& d) {
  Rdm r{std::move(items), d.values, d.source_metric};
  // Exact symmetry and zero diagonal regardless of upstream rounding.
  for (Eigen::Index i = 0; i < r.values.rows(); ++i) {
    r.values(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < r.values.cols(); ++j) r.values(j, i) = r.values(i, j);
  }
  return r;
}

// Vector metrics on embeddings.
inline Rdm build_rdm(const PointSet& ps, const MetricSpec& metric) {
  if (!metric.is_vector_metric())
    throw MetricUnavailable(to_string(metric) + " RDMs are built from a graph, not a point set");
  if (ps.kind != PointSetKind::Embeddings)
    throw MetricUnavailable(to_string(metric) + " needs embeddings; input is a similarity matrix");
  return make_rdm(ps.items, to_distance(ps, metric));
}

inline Rdm build_rdm(const WeightedGraph& g) {
  return make_rdm(g.nodes(), shortest_path_matrix(g));
}

inline Rdm build_rdm(const WeightedGraph& g, const FlowState& flow) {
  return make_rdm(g.nodes(), flow_metric(flow, g));
}

namespace detail {

inline std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

inline std::vector<double> upper_triangle(const Eigen::MatrixXd& m) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(m.rows() * (m.rows() - 1) / 2));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) v.push_back(m(i, j));
  return v;
}

inline void require_matching(const Rdm& a, const Rdm& b) {
  if (a.items != b.items) throw NodeSetMismatch("RDMs must cover the same items in the same order");
}

}  // namespace detail

struct AlignmentScore {
  double r = 0.0;
  std::size_t n_pairs = 0;
  std::string metric_a;
  std::string metric_b;
};

// Pearson correlation over the strict upper triangles.
inline AlignmentScore rsa_score(const Rdm& a, const Rdm& b) {
  detail::require_matching(a, b);
  if (a.size() < 3) throw ValidationError("RSA needs at least 3 items");
  if (&a == &b || a.values == b.values) {
    const auto v = detail::upper_triangle(a.values);
    if (!detail::pearson(v, v)) throw ZeroVariance("RDM '" + a.tag() + "' is constant");
    return {1.0, v.size(), a.tag(), b.tag()};
  }
  const auto va = detail::upper_triangle(a.values);
  const auto vb = detail::upper_triangle(b.values);
  const auto r = detail::pearson(va, vb);
  if (!r) throw ZeroVariance("constant RDM in comparison " + a.tag() + " vs " + b.tag());
  return {*r, va.size(), a.tag(), b.tag()};
}

// Per-item correlation of RDM rows, self entry excluded. nullopt marks a
// row with zero variance in either RDM.
inline std::vector<std::optional<double>> profile_analysis(const Rdm& a, const Rdm& b) {
  detail::require_matching(a, b);
  if (a.size() < 4) throw ValidationError("profile analysis needs at least 4 items");
  const auto n = static_cast<Eigen::Index>(a.size());
  std::vector<std::optional<double>> out;
  out.reserve(a.size());
  std::vector<double> ra, rb;
  for (Eigen::Index i = 0; i < n; ++i) {
    ra.clear();
    rb.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      ra.push_back(a.values(i, j));
      rb.push_back(b.values(i, j));
    }
    out.push_back(ra == rb ? (detail::pearson(ra, ra) ? std::optional(1.0) : std::nullopt)
                           : detail::pearson(ra, rb));
  }
  return out;
}

// Symmetric matrix of rsa_score values with unit diagonal.
inline Eigen::MatrixXd alignment_matrix(const std::vector<Rdm>& rdms) {
  const auto k = static_cast<Eigen::Index>(rdms.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j)
      m(i, j) = m(j, i) = rsa_score(rdms[static_cast<std::size_t>(i)], rdms[static_cast<std::size_t>(j)]).r;
  return m;
}

}  // namespace curvalign
