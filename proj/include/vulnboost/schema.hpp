#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vulnboost/common.hpp"

namespace vulnboost {

enum class ColumnKind {
  kBinaryFlag,
  kCategoricalVersion,
  kCategoricalPlain,
  kCveId,
  kDate,
  kCount,
  kCvssScore,
};

enum class ConceptRule {
  kNone,
  kMajorOnly,
  kMajorMinor,
  kYearOnly,
};

inline const char* to_string(ColumnKind k) {
  switch (k) {
    case ColumnKind::kBinaryFlag: return "binary-flag";
    case ColumnKind::kCategoricalVersion: return "categorical-version";
    case ColumnKind::kCategoricalPlain: return "categorical-plain";
    case ColumnKind::kCveId: return "cve-id";
    case ColumnKind::kDate: return "date";
    case ColumnKind::kCount: return "count";
    case ColumnKind::kCvssScore: return "cvss-score";
  }
  return "?";
}

inline const char* to_string(ConceptRule r) {
  switch (r) {
    case ConceptRule::kNone: return "none";
    case ConceptRule::kMajorOnly: return "major-only";
    case ConceptRule::kMajorMinor: return "major-minor";
    case ConceptRule::kYearOnly: return "year-only";
  }
  return "?";
}

inline ColumnKind column_kind_from(const std::string& s) {
  for (ColumnKind k :
       {ColumnKind::kBinaryFlag, ColumnKind::kCategoricalVersion,
        ColumnKind::kCategoricalPlain, ColumnKind::kCveId, ColumnKind::kDate,
        ColumnKind::kCount, ColumnKind::kCvssScore}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown column kind '" + s + "'");
}

inline ConceptRule concept_rule_from(const std::string& s) {
  for (ConceptRule r : {ConceptRule::kNone, ConceptRule::kMajorOnly,
                        ConceptRule::kMajorMinor, ConceptRule::kYearOnly}) {
    if (s == to_string(r)) return r;
  }
  throw ConfigError("unknown concept rule '" + s + "'");
}

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::kCategoricalPlain;
  ConceptRule rule = ConceptRule::kNone;

  bool categorical() const {
    return kind == ColumnKind::kCategoricalVersion ||
           kind == ColumnKind::kCategoricalPlain || kind == ColumnKind::kCveId;
  }
};

// The label column is always present and always named this.
inline constexpr const char* kLabelColumn = "Score";
inline constexpr int kNumGrades = 11;
inline constexpr std::size_t kNumFeatures = 12;

/// Ordered description of the 12 feature columns of an asset record. The
/// label column is implicit and named `Score`.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<Column> columns)
      : columns_(std::move(columns)) {
    validate();
  }

  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::size_t i) const { return columns_.at(i); }
  std::size_t size() const { return columns_.size(); }

  void validate() const {
    if (columns_.size() != kNumFeatures)
      throw ConfigError("schema must have exactly 12 feature columns, got " +
                        std::to_string(columns_.size()));
    std::set<std::string> names;
    for (const auto& c : columns_) {
      if (c.name.empty()) throw ConfigError("schema column with empty name");
      if (c.name == kLabelColumn)
        throw ConfigError("feature column may not be named 'Score'");
      if (!names.insert(c.name).second)
        throw ConfigError("duplicate schema column '" + c.name + "'");
      if (c.kind == ColumnKind::kCategoricalVersion &&
          c.rule == ConceptRule::kNone)
        throw ConfigError("categorical-version column '" + c.name +
                          "' needs a concept rule");
    }
  }

  /// The asset schema used throughout: four binary management flags, four
  /// versioned product names, a fingerprint count, a CVSS score, the CVE id
  /// of the dominant vulnerability, and its discovery date.
  static FeatureSchema asset_default() {
    return FeatureSchema({
        {"weak_password", ColumnKind::kBinaryFlag, ConceptRule::kNone},
        {"firewall", ColumnKind::kBinaryFlag, ConceptRule::kNone},
        {"cloud_hosting", ColumnKind::kBinaryFlag, ConceptRule::kNone},
        {"cdn", ColumnKind::kBinaryFlag, ConceptRule::kNone},
        {"os", ColumnKind::kCategoricalVersion, ConceptRule::kMajorOnly},
        {"web_language", ColumnKind::kCategoricalVersion,
         ConceptRule::kMajorMinor},
        {"web_container", ColumnKind::kCategoricalVersion,
         ConceptRule::kMajorMinor},
        {"fingerprint_count", ColumnKind::kCount, ConceptRule::kNone},
        {"web_app", ColumnKind::kCategoricalVersion, ConceptRule::kMajorMinor},
        {"cvss_score", ColumnKind::kCvssScore, ConceptRule::kNone},
        {"vuln_cve", ColumnKind::kCveId, ConceptRule::kYearOnly},
        {"vuln_discovered", ColumnKind::kDate, ConceptRule::kNone},
    });
  }

  // One `name,kind,concept-rule` line per feature column.
  std::string serialize() const {
    std::ostringstream out;
    for (const auto& c : columns_)
      out << c.name << ',' << to_string(c.kind) << ',' << to_string(c.rule)
          << '\n';
    return out.str();
  }

  std::uint64_t fingerprint() const { return fnv1a64(serialize()); }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write schema file '" + path + "'");
    out << serialize();
  }

  static FeatureSchema parse(std::istream& in, const std::string& origin) {
    std::vector<Column> cols;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      auto parts = split(t, ',');
      if (parts.size() != 3)
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": expected 'name,kind,concept-rule'");
      cols.push_back({trim(parts[0]), column_kind_from(trim(parts[1])),
                      concept_rule_from(trim(parts[2]))});
    }
    return FeatureSchema(std::move(cols));
  }

  static FeatureSchema load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema file '" + path + "'");
    return parse(in, path);
  }

 private:
  std::vector<Column> columns_;
};

}  // namespace vulnboost
