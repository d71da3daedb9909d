#pragma once

// Ingestion of representational spaces and their conversion to distances.
//
// Two CSV layouts are accepted:
//   embeddings  - header `id,dim_0,...,dim_{D-1}`, one item per row
//   matrix      - header row and first column both carry item ids,
//                 cell (i, j) holds s(i, j) (similarity) or d(i, j)

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "curvalign/error.hpp"

namespace curvalign {

enum class PointSetKind { Embeddings, Similarity };

inline std::string to_string(PointSetKind kind) {
  return kind == PointSetKind::Embeddings ? "embeddings" : "similarity";
}

inline PointSetKind parse_pointset_kind(std::string_view s) {
  if (s == "embeddings") return PointSetKind::Embeddings;
  if (s == "similarity") return PointSetKind::Similarity;
  throw ValidationError("unknown point-set kind '" + std::string(s) + "'");
}

struct PointSet {
  std::vector<std::string> items;
  Eigen::MatrixXd payload;  // N x D embeddings or N x N similarities
  PointSetKind kind = PointSetKind::Embeddings;

  std::size_t size() const { return items.size(); }

  void validate() const {
    const auto n = static_cast<Eigen::Index>(items.size());
    if (n < 2) throw ValidationError("point set needs at least 2 items");
    if (payload.rows() != n)
      throw ValidationError("payload row count does not match item count");
    if (payload.cols() < 1) throw ValidationError("payload has no columns");
    if (!payload.allFinite()) throw ValidationError("payload contains non-finite values");
    if (kind == PointSetKind::Similarity) {
      if (payload.cols() != n) throw ValidationError("similarity matrix is not square");
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          if (payload(i, j) < 0.0)
            throw ValidationError("negative similarity at (" + std::to_string(i) + "," +
                                  std::to_string(j) + ")");
          if (std::abs(payload(i, j) - payload(j, i)) > 1e-9)
            throw ValidationError("similarity matrix is asymmetric at (" +
                                  std::to_string(i) + "," + std::to_string(j) + ")");
        }
      }
    }
  }

  // Restriction to a subset of items, order preserved.
  PointSet subset(const std::vector<std::size_t>& idx) const {
    PointSet out;
    out.kind = kind;
    const auto k = static_cast<Eigen::Index>(idx.size());
    out.payload.resize(k, kind == PointSetKind::Similarity ? k : payload.cols());
    for (Eigen::Index a = 0; a < k; ++a) {
      out.items.push_back(items[idx[a]]);
      const auto i = static_cast<Eigen::Index>(idx[a]);
      if (kind == PointSetKind::Similarity) {
        for (Eigen::Index b = 0; b < k; ++b)
          out.payload(a, b) = payload(i, static_cast<Eigen::Index>(idx[b]));
      } else {
        out.payload.row(a) = payload.row(i);
      }
    }
    return out;
  }
};

enum class MetricKind { Euclidean, Cosine, Minkowski, FromSimilarity, ShortestPath, FlowMetric };

struct MetricSpec {
  MetricKind kind = MetricKind::Euclidean;
  double p = 3.0;  // Minkowski order; ignored otherwise

  static MetricSpec euclidean() { return {MetricKind::Euclidean, 2.0}; }
  static MetricSpec cosine() { return {MetricKind::Cosine, 0.0}; }
  static MetricSpec minkowski(double p = 3.0) { return {MetricKind::Minkowski, p}; }
  static MetricSpec from_similarity() { return {MetricKind::FromSimilarity, 0.0}; }
  static MetricSpec shortest_path() { return {MetricKind::ShortestPath, 0.0}; }
  static MetricSpec flow_metric() { return {MetricKind::FlowMetric, 0.0}; }

  bool is_vector_metric() const {
    return kind == MetricKind::Euclidean || kind == MetricKind::Cosine ||
           kind == MetricKind::Minkowski;
  }

  friend bool operator==(const MetricSpec& a, const MetricSpec& b) {
    return a.kind == b.kind && (a.kind != MetricKind::Minkowski || a.p == b.p);
  }
};

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string to_string(const MetricSpec& m) {
  switch (m.kind) {
    case MetricKind::Euclidean: return "euclidean";
    case MetricKind::Cosine: return "cosine";
    case MetricKind::Minkowski: return "minkowski(p=" + format_number(m.p) + ")";
    case MetricKind::FromSimilarity: return "from_similarity";
    case MetricKind::ShortestPath: return "shortest_path";
    case MetricKind::FlowMetric: return "flow_metric";
  }
  return "unknown";
}

// Accepts the names produced by to_string plus `minkowski` and `minkowski:<p>`.
inline MetricSpec parse_metric(std::string_view s) {
  if (s == "euclidean") return MetricSpec::euclidean();
  if (s == "cosine") return MetricSpec::cosine();
  if (s == "from_similarity") return MetricSpec::from_similarity();
  if (s == "shortest_path") return MetricSpec::shortest_path();
  if (s == "flow_metric") return MetricSpec::flow_metric();
  if (s == "minkowski") return MetricSpec::minkowski();
  std::string p;
  if (s.starts_with("minkowski:")) {
    p = std::string(s.substr(10));
  } else if (s.starts_with("minkowski(p=") && s.ends_with(")")) {
    p = std::string(s.substr(12, s.size() - 13));
  } else {
    throw InvalidMetric("unknown metric '" + std::string(s) + "'");
  }
  try {
    std::size_t used = 0;
    const double value = std::stod(p, &used);
    if (used != p.size()) throw std::invalid_argument(p);
    return MetricSpec::minkowski(value);
  } catch (const std::exception&) {
    throw InvalidMetric("bad minkowski order '" + p + "'");
  }
}

struct DistanceMatrix {
  Eigen::MatrixXd values;
  MetricSpec source_metric;

  std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
};

namespace detail {

inline double vector_distance(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                              const Eigen::Ref<const Eigen::RowVectorXd>& y,
                              const MetricSpec& metric) {
  switch (metric.kind) {
    case MetricKind::Euclidean: return (x - y).norm();
    case MetricKind::Minkowski:
      if (metric.p == 1.0) return (x - y).lpNorm<1>();
      if (metric.p == 2.0) return (x - y).norm();
      return std::pow((x - y).array().abs().pow(metric.p).sum(), 1.0 / metric.p);
    case MetricKind::Cosine: {
      const double nx = x.norm();
      const double ny = y.norm();
      if (nx == 0.0 || ny == 0.0) throw DegenerateInput("zero-norm vector under cosine metric");
      return std::max(0.0, 1.0 - x.dot(y) / (nx * ny));
    }
    default: throw InvalidMetric("not a vector metric: " + to_string(metric));
  }
}

}  // namespace detail

inline DistanceMatrix to_distance(const PointSet& ps, const MetricSpec& metric) {
  ps.validate();
  const auto n = static_cast<Eigen::Index>(ps.size());
  DistanceMatrix out{Eigen::MatrixXd::Zero(n, n), metric};
  if (ps.kind == PointSetKind::Similarity) {
    if (metric.kind != MetricKind::FromSimilarity)
      throw MetricUnavailable(to_string(metric) + " needs embeddings; input is a similarity matrix");
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        // The payload is symmetric only within 1e-9; average so the output is exact.
        const double s = 0.5 * (ps.payload(i, j) + ps.payload(j, i));
        out.values(i, j) = out.values(j, i) = std::max(0.0, 1.0 - s);
      }
    return out;
  }
  if (!metric.is_vector_metric())
    throw MetricUnavailable(to_string(metric) + " is not defined on embeddings");
  if (metric.kind == MetricKind::Minkowski && !(metric.p >= 1.0))
    throw InvalidMetric("minkowski order must be >= 1");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      out.values(i, j) = out.values(j, i) =
          detail::vector_distance(ps.payload.row(i), ps.payload.row(j), metric);
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace csv {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Comma separated, optional double quotes around a field ("" escapes a quote).
inline std::vector<std::string> split_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      if (!trim(cur).empty())
        throw ParseError("line " + std::to_string(line_no) + ": stray quote");
      cur.clear();
      quoted = was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError("line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(was_quoted ? cur : trim(cur));
  return fields;
}

inline std::vector<std::vector<std::string>> read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;  // comment lines carry provenance
    rows.push_back(split_line(line, line_no));
  }
  return rows;
}

inline double parse_number(const std::string& field, std::size_t row, std::size_t col) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::out_of_range&) {
    throw ValidationError("value out of range at row " + std::to_string(row) + ", column " +
                          std::to_string(col));
  } catch (const std::exception&) {
    throw ParseError("not a number: '" + field + "' at row " + std::to_string(row) +
                     ", column " + std::to_string(col));
  }
}

inline std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string format_exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace csv

inline PointSet load_pointset(const std::string& path, PointSetKind kind) {
  const auto rows = csv::read_file(path);
  if (rows.size() < 2) throw ParseError("'" + path + "' needs a header and at least one data row");
  const auto& header = rows.front();
  if (header.size() < 2) throw ParseError("header has fewer than 2 columns");
  PointSet ps;
  ps.kind = kind;
  const std::size_t n = rows.size() - 1;
  const std::size_t cols = header.size() - 1;
  if (kind == PointSetKind::Similarity && cols != n)
    throw ValidationError("similarity matrix is not square (" + std::to_string(n) + " rows, " +
                          std::to_string(cols) + " columns)");
  ps.payload.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = rows[r + 1];
    if (row.size() != header.size())
      throw ParseError("row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                       " fields, expected " + std::to_string(header.size()));
    ps.items.push_back(row[0]);
    for (std::size_t c = 0; c < cols; ++c)
      ps.payload(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          csv::parse_number(row[c + 1], r + 1, c + 1);
  }
  if (kind == PointSetKind::Similarity) {
    for (std::size_t c = 0; c < cols; ++c)
      if (header[c + 1] != ps.items[c])
        throw ValidationError("column id '" + header[c + 1] + "' does not match row id '" +
                              ps.items[c] + "'");
  }
  ps.validate();
  return ps;
}

// Square matrix with id header row and id first column.
inline void write_matrix_csv(const std::string& path, const std::vector<std::string>& ids,
                             const Eigen::MatrixXd& m, const std::string& comment = {}) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "id";
  for (const auto& id : ids) out << ',' << csv::quote_if_needed(id);
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << csv::quote_if_needed(ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << csv::format_exact(m(i, j));
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline void save_pointset(const PointSet& ps, const std::string& path) {
  if (ps.kind == PointSetKind::Similarity) {
    write_matrix_csv(path, ps.items, ps.payload);
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "id";
  for (Eigen::Index d = 0; d < ps.payload.cols(); ++d) out << ",dim_" << d;
  out << '\n';
  for (Eigen::Index i = 0; i < ps.payload.rows(); ++i) {
    out << csv::quote_if_needed(ps.items[static_cast<std::size_t>(i)]);
    for (Eigen::Index d = 0; d < ps.payload.cols(); ++d)
      out << ',' << csv::format_exact(ps.payload(i, d));
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace curvalign
