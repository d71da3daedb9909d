#pragma once

// Analysis reports: JSON with sorted keys and numbers rounded to 12
// significant digits, so identical runs produce identical bytes.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "curvalign/error.hpp"

namespace curvalign {

using Json = nlohmann::json;  // std::map-backed objects, keys always sorted

inline constexpr const char* kToolVersion = "0.3.0";

inline double round_significant(double v, int digits = 12) {
  if (!std::isfinite(v) || v == 0.0) return v;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return std::strtod(buf, nullptr);
}

// Rounds every float in place; non-finite values become null since JSON
// has no representation for them.
inline Json canonicalize(const Json& j) {
  switch (j.type()) {
    case Json::value_t::object: {
      Json out = Json::object();
      for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = canonicalize(it.value());
      return out;
    }
    case Json::value_t::array: {
      Json out = Json::array();
      for (const auto& v : j) out.push_back(canonicalize(v));
      return out;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) return nullptr;
      return round_significant(v);
    }
    default: return j;
  }
}

inline std::string dump_canonical(const Json& j) { return canonicalize(j).dump(2) + "\n"; }

// 64-bit FNV-1a; stable across platforms, used for config hashes and manifests.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct AnalysisReport {
  Json provenance = Json::object();  // inputs, parameters, seed, tool version
  Json results = Json::object();     // one block per analysis

  Json to_json() const { return Json{{"provenance", provenance}, {"results", results}}; }

  static AnalysisReport from_json(const Json& j) {
    if (!j.is_object() || !j.contains("provenance") || !j.contains("results"))
      throw ParseError("report JSON needs 'provenance' and 'results'");
    return {j.at("provenance"), j.at("results")};
  }

  friend bool operator==(const AnalysisReport& a, const AnalysisReport& b) {
    return a.provenance == b.provenance && a.results == b.results;
  }
};

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void save_json(const Json& j, const std::string& path) {
  write_text_file(path, dump_canonical(j));
}

inline Json load_json(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

inline void save_report(const AnalysisReport& report, const std::string& path) {
  save_json(report.to_json(), path);
}

inline AnalysisReport load_report(const std::string& path) {
  return AnalysisReport::from_json(load_json(path));
}

}  // namespace curvalign
