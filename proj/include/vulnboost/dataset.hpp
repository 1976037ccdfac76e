#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vulnboost/common.hpp"
#include "vulnboost/schema.hpp"

namespace vulnboost {

// ---------------------------------------------------------------------------
// Raw records
// ---------------------------------------------------------------------------

/// One CSV row, still as strings. 13 values when labeled (features + Score),
/// 12 when the file is a prediction input without labels.
struct RawAssetRecord {
  std::vector<std::string> values;

  bool labeled(const FeatureSchema& schema) const {
    return values.size() == schema.size() + 1;
  }
};

// ---------------------------------------------------------------------------
// Concept merging
// ---------------------------------------------------------------------------

namespace detail {

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

// First run of exactly four digits ("the year"); npos if there is none.
inline std::size_t find_year_run(std::string_view s, std::size_t* run_end) {
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_digit(s[i])) {
      std::size_t j = i;
      while (j < s.size() && is_digit(s[j])) ++j;
      if (j - i == 4) {
        *run_end = j;
        return i;
      }
      i = j;
    } else {
      ++i;
    }
  }
  return std::string::npos;
}

}  // namespace detail

/// Truncates a version-bearing category string to a coarser concept:
///   major-only   "Ubuntu18.04"     -> "Ubuntu18"
///   major-minor  "PHP5.3.29"       -> "PHP5.3"
///   year-only    "CVE-2021-44228"  -> "CVE-2021"
/// A value without a parseable version passes through unchanged and bumps
/// *warnings. Idempotent under every rule.
inline std::string concept_merge(std::string_view value, ConceptRule rule,
                                 std::size_t* warnings = nullptr) {
  if (rule == ConceptRule::kNone) return std::string(value);

  if (rule == ConceptRule::kYearOnly) {
    std::size_t run_end = 0;
    std::size_t pos = detail::find_year_run(value, &run_end);
    if (pos == std::string::npos) {
      if (warnings) ++*warnings;
      return std::string(value);
    }
    return std::string(value.substr(0, run_end));
  }

  // major-only / major-minor: name prefix + one or two dot-joined numbers.
  std::size_t p = 0;
  while (p < value.size() && !detail::is_digit(value[p])) ++p;
  if (p == value.size()) {
    if (warnings) ++*warnings;
    return std::string(value);
  }
  std::size_t q = p;
  while (q < value.size() && detail::is_digit(value[q])) ++q;
  if (rule == ConceptRule::kMajorMinor && q + 1 < value.size() &&
      value[q] == '.' && detail::is_digit(value[q + 1])) {
    q = q + 1;
    while (q < value.size() && detail::is_digit(value[q])) ++q;
  }
  return std::string(value.substr(0, q));
}

// ---------------------------------------------------------------------------
// Date serial numbers
// ---------------------------------------------------------------------------

namespace detail {
inline std::chrono::sys_days serial_epoch() {
  using namespace std::chrono;
  return sys_days{year{1899} / December / day{31}};
}
}  // namespace detail

/// Spreadsheet-style day serial for "YYYY/M/D": 1900/1/1 maps to 1 and the
/// fictitious 1900/2/29 occupies slot 60, so every real date from 1900/3/1
/// onward sits at (days since 1899/12/31) + 1.
inline long date_to_serial(const std::string& date) {
  using namespace std::chrono;
  auto parts = split(trim(date), '/');
  if (parts.size() != 3)
    throw DataError("cannot parse date '" + date + "': expected YYYY/M/D");
  long y, m, d;
  try {
    y = parse_int(trim(parts[0]), "date");
    m = parse_int(trim(parts[1]), "date");
    d = parse_int(trim(parts[2]), "date");
  } catch (const DataError&) {
    throw DataError("cannot parse date '" + date + "': expected YYYY/M/D");
  }
  year_month_day ymd{year{static_cast<int>(y)},
                     month{static_cast<unsigned>(m)},
                     day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw DataError("'" + date + "' is not a calendar date");
  if (y < 1900) throw DataError("date '" + date + "' is before 1900/1/1");
  long days = (sys_days{ymd} - detail::serial_epoch()).count();
  bool after_leap_gap = ymd >= year_month_day{year{1900} / March / day{1}};
  return days + (after_leap_gap ? 1 : 0);
}

/// Inverse of date_to_serial, unpadded "YYYY/M/D" text.
inline std::string serial_to_date(long serial) {
  using namespace std::chrono;
  if (serial < 1 || serial == 60)
    throw DataError("serial " + std::to_string(serial) +
                    " has no calendar date");
  long days = serial - (serial > 60 ? 1 : 0);
  year_month_day ymd{detail::serial_epoch() + std::chrono::days{days}};
  std::ostringstream out;
  out << static_cast<int>(ymd.year()) << '/' << unsigned(ymd.month()) << '/'
      << unsigned(ymd.day());
  return out.str();
}

// ---------------------------------------------------------------------------
// Label encoding
// ---------------------------------------------------------------------------

/// Per-column map from category string to integer code. Codes follow the
/// lexicographic order of the category strings, 0..k-1, which makes the
/// assignment deterministic across runs and platforms. Unseen categories can
/// map to the reserved code k (one past the fitted range).
class LabelEncoder {
 public:
  void fit_column(const std::string& column,
                  const std::set<std::string>& categories) {
    columns_[column].assign(categories.begin(), categories.end());
  }

  bool has_column(const std::string& column) const {
    return columns_.count(column) != 0;
  }

  std::size_t cardinality(const std::string& column) const {
    return categories(column).size();
  }

  /// Code for a fitted category; unseen values take the reserved code
  /// (cardinality) and bump *warnings when allow_unseen, else throw.
  int encode(const std::string& column, const std::string& value,
             bool allow_unseen = false, std::size_t* warnings = nullptr) const {
    const auto& cats = categories(column);
    auto it = std::lower_bound(cats.begin(), cats.end(), value);
    if (it == cats.end() || *it != value) {
      if (!allow_unseen)
        throw DataError("category '" + value + "' not fitted for column '" +
                        column + "'");
      if (warnings) ++*warnings;
      return static_cast<int>(cats.size());
    }
    return static_cast<int>(it - cats.begin());
  }

  const std::string& decode(const std::string& column, int code) const {
    const auto& cats = categories(column);
    if (code < 0 || static_cast<std::size_t>(code) >= cats.size())
      throw DataError("code " + std::to_string(code) +
                      " out of range for column '" + column + "'");
    return cats[static_cast<std::size_t>(code)];
  }

  std::string serialize() const {
    std::ostringstream out;
    for (const auto& [name, cats] : columns_) {
      out << "column " << name << ' ' << cats.size() << '\n';
      for (const auto& c : cats) out << c << '\n';
    }
    return out.str();
  }

  static LabelEncoder parse(std::istream& in, const std::string& origin) {
    LabelEncoder enc;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string t = trim(line);
      if (t.empty()) continue;
      auto parts = split(t, ' ');
      if (parts.size() != 3 || parts[0] != "column")
        throw DataError(origin + ":" + std::to_string(lineno) +
                        ": expected 'column <name> <count>'");
      long n = parse_int(parts[2], origin);
      std::vector<std::string> cats;
      cats.reserve(static_cast<std::size_t>(n));
      for (long i = 0; i < n; ++i) {
        if (!std::getline(in, line))
          throw DataError(origin + ": truncated encoder category list");
        ++lineno;
        cats.push_back(trim(line));
      }
      enc.columns_[parts[1]] = std::move(cats);
    }
    return enc;
  }

 private:
  const std::vector<std::string>& categories(const std::string& column) const {
    auto it = columns_.find(column);
    if (it == columns_.end())
      throw DataError("column '" + column + "' not fitted in label encoder");
    return it->second;
  }

  std::map<std::string, std::vector<std::string>> columns_;
};

// ---------------------------------------------------------------------------
// Encoded datasets
// ---------------------------------------------------------------------------

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  double* row(std::size_t r) { return data.data() + r * cols; }
};

/// Dense numeric view of a record set: 12 feature doubles per row plus an
/// integer grade in [0,10]. Immutable once built; safe to share across
/// threads.
struct EncodedDataset {
  Matrix features;
  std::vector<int> labels;
  FeatureSchema schema;
  LabelEncoder encoder;

  std::size_t size() const { return features.rows; }
};

// ---------------------------------------------------------------------------
// CSV loading
// ---------------------------------------------------------------------------

/// Reads a header-first CSV against the schema. Accepts both labeled files
/// (features + Score) and unlabeled ones (features only); the two may not be
/// mixed within a file. Reports offending columns and row numbers (the header
/// is row 1).
inline std::vector<RawAssetRecord> load_raw_csv(const std::string& path,
                                                const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file '" + path + "'");

  std::string line;
  if (!std::getline(in, line))
    throw DataError(path + ": missing header row");
  auto header = split(trim(line), ',');
  for (auto& h : header) h = trim(h);

  bool labeled;
  if (header.size() == schema.size() + 1 && header.back() == kLabelColumn)
    labeled = true;
  else if (header.size() == schema.size())
    labeled = false;
  else
    throw DataError(path + ": header has " + std::to_string(header.size()) +
                    " columns, schema expects " +
                    std::to_string(schema.size()) + " (+ optional 'Score')");

  std::vector<std::string> mismatches;
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (header[i] != schema.column(i).name)
      mismatches.push_back("'" + header[i] + "' (expected '" +
                           schema.column(i).name + "')");
  if (!mismatches.empty()) {
    std::string msg = path + ": header mismatch:";
    for (const auto& m : mismatches) msg += " " + m;
    throw DataError(msg);
  }

  std::vector<RawAssetRecord> records;
  std::size_t expected = schema.size() + (labeled ? 1 : 0);
  long rowno = 1;
  while (std::getline(in, line)) {
    ++rowno;
    if (trim(line).empty()) continue;
    RawAssetRecord rec{split(trim(line), ',')};
    for (auto& v : rec.values) v = trim(v);
    if (rec.values.size() != expected)
      throw DataError(path + ": row " + std::to_string(rowno) + " has " +
                      std::to_string(rec.values.size()) + " fields, expected " +
                      std::to_string(expected));
    records.push_back(std::move(rec));
  }
  return records;
}

inline void write_raw_csv(std::ostream& out,
                          const std::vector<RawAssetRecord>& records,
                          const FeatureSchema& schema, bool labeled) {
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (i) out << ',';
    out << schema.column(i).name;
  }
  if (labeled) out << ',' << kLabelColumn;
  out << '\n';
  for (const auto& rec : records) {
    for (std::size_t i = 0; i < rec.values.size(); ++i) {
      if (i) out << ',';
      out << rec.values[i];
    }
    out << '\n';
  }
}

inline void write_raw_csv(const std::string& path,
                          const std::vector<RawAssetRecord>& records,
                          const FeatureSchema& schema, bool labeled) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write CSV file '" + path + "'");
  write_raw_csv(out, records, schema, labeled);
}

// ---------------------------------------------------------------------------
// Encoding pipeline
// ---------------------------------------------------------------------------

/// Applies the per-column concept rules to every record (row-local, no fitted
/// state). Unmergeable values pass through and count into *warnings.
inline std::vector<RawAssetRecord> canonicalize_records(
    std::vector<RawAssetRecord> records, const FeatureSchema& schema,
    std::size_t* warnings = nullptr) {
  for (auto& rec : records)
    for (std::size_t c = 0; c < schema.size(); ++c)
      if (schema.column(c).rule != ConceptRule::kNone)
        rec.values[c] = concept_merge(rec.values[c], schema.column(c).rule,
                                      warnings);
  return records;
}

/// Collects the category set of every categorical column and assigns sorted
/// codes. Expects canonicalized records.
inline LabelEncoder fit_label_encoder(
    const std::vector<RawAssetRecord>& records, const FeatureSchema& schema) {
  LabelEncoder enc;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (!schema.column(c).categorical()) continue;
    std::set<std::string> cats;
    for (const auto& rec : records) cats.insert(rec.values[c]);
    enc.fit_column(schema.column(c).name, cats);
  }
  return enc;
}

namespace detail {

inline double encode_flag(const std::string& v, const std::string& where) {
  if (iequals(v, "YES") || v == "1" || iequals(v, "TRUE")) return 1.0;
  if (iequals(v, "NO") || v == "0" || iequals(v, "FALSE")) return 0.0;
  throw DataError(where + ": unrecognized flag value '" + v + "'");
}

}  // namespace detail

/// Turns canonicalized records into the dense numeric dataset using an
/// already-fitted encoder. With allow_unseen, categories missing from the
/// encoder take the reserved code and count into *warnings (the prediction
/// path); otherwise they throw.
inline EncodedDataset apply_encoding(const std::vector<RawAssetRecord>& records,
                                     const FeatureSchema& schema,
                                     const LabelEncoder& encoder,
                                     bool allow_unseen = false,
                                     std::size_t* warnings = nullptr) {
  EncodedDataset ds;
  ds.schema = schema;
  ds.encoder = encoder;
  ds.features = Matrix(records.size(), schema.size());

  bool any_labeled = false;
  for (const auto& r : records) any_labeled |= r.labeled(schema);

  ds.labels.reserve(records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    std::string where = "row " + std::to_string(r + 2);
    if (rec.values.size() != schema.size() + (any_labeled ? 1 : 0))
      throw DataError(where + ": inconsistent field count");
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const Column& col = schema.column(c);
      const std::string& v = rec.values[c];
      double out;
      switch (col.kind) {
        case ColumnKind::kBinaryFlag:
          out = detail::encode_flag(v, where + ", column " + col.name);
          break;
        case ColumnKind::kCategoricalVersion:
        case ColumnKind::kCategoricalPlain:
        case ColumnKind::kCveId:
          out = encoder.encode(col.name, v, allow_unseen, warnings);
          break;
        case ColumnKind::kDate:
          out = static_cast<double>(date_to_serial(v));
          break;
        case ColumnKind::kCount:
        case ColumnKind::kCvssScore:
          out = parse_real(v, where + ", column " + col.name);
          break;
        default:
          throw InternalError("unhandled column kind");
      }
      ds.features.at(r, c) = out;
    }
    if (any_labeled) {
      long score = parse_int(rec.values.back(), where + ", column Score");
      if (score < 0 || score >= kNumGrades)
        throw DataError(where + ": score " + std::to_string(score) +
                        " outside 0..10");
      ds.labels.push_back(static_cast<int>(score));
    }
  }
  return ds;
}

/// The whole Table-2 treatment in one call: concept merging, encoder fitting,
/// numeric encoding. Every record must be labeled.
inline EncodedDataset encode_dataset(const std::vector<RawAssetRecord>& records,
                                     const FeatureSchema& schema,
                                     std::size_t* warnings = nullptr) {
  for (std::size_t r = 0; r < records.size(); ++r)
    if (!records[r].labeled(schema))
      throw DataError("row " + std::to_string(r + 2) + ": missing score");
  auto canon = canonicalize_records(records, schema, warnings);
  LabelEncoder enc = fit_label_encoder(canon, schema);
  return apply_encoding(canon, schema, enc, false, warnings);
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

/// Marks round(class_count * test_fraction) rows of each class for test,
/// deterministically from the seed. Requires every class present to have at
/// least two rows.
inline std::vector<char> stratified_test_mask(const std::vector<int>& labels,
                                              double test_fraction,
                                              std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test_fraction must lie in (0,1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(i);

  std::vector<char> is_test(labels.size(), 0);
  for (auto& [cls, rows] : by_class) {
    if (rows.size() < 2)
      throw DataError("class " + std::to_string(cls) +
                      " has fewer than 2 rows; cannot split");
    RngStream rng(seed, 0x73706c6974ULL, static_cast<std::uint64_t>(cls));
    // Shuffle, then take the head as the test partition.
    std::vector<std::size_t> order = rows;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      std::size_t j = i + rng.next_index(order.size() - i);
      std::swap(order[i], order[j]);
    }
    auto take = static_cast<std::size_t>(
        std::llround(static_cast<double>(rows.size()) * test_fraction));
    for (std::size_t i = 0; i < take && i < order.size(); ++i)
      is_test[order[i]] = 1;
  }
  return is_test;
}

namespace detail {

inline EncodedDataset select_rows(const EncodedDataset& ds,
                                  const std::vector<char>& mask, char keep) {
  EncodedDataset out;
  out.schema = ds.schema;
  out.encoder = ds.encoder;
  std::size_t n = 0;
  for (char m : mask) n += (m == keep);
  out.features = Matrix(n, ds.features.cols);
  out.labels.reserve(n);
  std::size_t w = 0;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    if (mask[r] != keep) continue;
    for (std::size_t c = 0; c < ds.features.cols; ++c)
      out.features.at(w, c) = ds.features.at(r, c);
    out.labels.push_back(ds.labels[r]);
    ++w;
  }
  return out;
}

}  // namespace detail

/// 80/20-style split preserving per-class proportions. Row order within each
/// partition follows the original dataset.
inline std::pair<EncodedDataset, EncodedDataset> stratified_split(
    const EncodedDataset& ds, double test_fraction, std::uint64_t seed) {
  auto mask = stratified_test_mask(ds.labels, test_fraction, seed);
  return {detail::select_rows(ds, mask, 0), detail::select_rows(ds, mask, 1)};
}

/// Per-row fold assignment for stratified k-fold cross-validation: each
/// class's rows are shuffled and dealt round-robin.
inline std::vector<int> stratified_folds(const std::vector<int>& labels,
                                         int n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw ConfigError("need at least 2 folds");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(i);
  std::vector<int> fold(labels.size(), 0);
  for (auto& [cls, rows] : by_class) {
    RngStream rng(seed, 0x666f6c64ULL, static_cast<std::uint64_t>(cls));
    std::vector<std::size_t> order = rows;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      std::size_t j = i + rng.next_index(order.size() - i);
      std::swap(order[i], order[j]);
    }
    for (std::size_t i = 0; i < order.size(); ++i)
      fold[order[i]] = static_cast<int>(i % static_cast<std::size_t>(n_folds));
  }
  return fold;
}

}  // namespace vulnboost
