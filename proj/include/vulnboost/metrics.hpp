#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vulnboost/common.hpp"
#include "vulnboost/schema.hpp"

namespace vulnboost {

/// 11x11 count matrix indexed [true grade][predicted grade]. Everything in
/// the evaluation report derives from it.
class ConfusionMatrix {
 public:
  std::int64_t& at(int truth, int pred) {
    check(truth, pred);
    return counts_[truth][pred];
  }
  std::int64_t at(int truth, int pred) const {
    check(truth, pred);
    return counts_[truth][pred];
  }

  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto& row : counts_)
      for (std::int64_t v : row) t += v;
    return t;
  }

  std::int64_t row_sum(int truth) const {
    std::int64_t t = 0;
    for (std::int64_t v : counts_[static_cast<std::size_t>(truth)]) t += v;
    return t;
  }

  std::int64_t col_sum(int pred) const {
    std::int64_t t = 0;
    for (const auto& row : counts_) t += row[static_cast<std::size_t>(pred)];
    return t;
  }

  bool operator==(const ConfusionMatrix& other) const {
    return counts_ == other.counts_;
  }

 private:
  static void check(int truth, int pred) {
    if (truth < 0 || truth >= kNumGrades || pred < 0 || pred >= kNumGrades)
      throw DataError("grade outside 0..10 in confusion matrix");
  }

  std::array<std::array<std::int64_t, kNumGrades>, kNumGrades> counts_{};
};

inline ConfusionMatrix confusion_matrix(const std::vector<int>& truth,
                                        const std::vector<int>& pred) {
  if (truth.size() != pred.size())
    throw DataError("truth and prediction lists differ in length");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) cm.at(truth[i], pred[i]) += 1;
  return cm;
}

/// Multiclass accuracy: trace over total.
inline double accuracy(const ConfusionMatrix& cm) {
  std::int64_t total = cm.total();
  if (total == 0) throw DataError("empty confusion matrix");
  std::int64_t diag = 0;
  for (int g = 0; g < kNumGrades; ++g) diag += cm.at(g, g);
  return static_cast<double>(diag) / static_cast<double>(total);
}

struct ClassPrf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Precision, recall and their harmonic mean for one grade. Degenerate 0/0
/// ratios are defined as 0 (and counted into *warnings when given).
inline ClassPrf per_class_prf(const ConfusionMatrix& cm, int grade,
                              std::size_t* warnings = nullptr) {
  std::int64_t tp = cm.at(grade, grade);
  std::int64_t fp = cm.col_sum(grade) - tp;
  std::int64_t fn = cm.row_sum(grade) - tp;
  ClassPrf out;
  if (tp + fp > 0)
    out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  else if (warnings)
    ++*warnings;
  if (tp + fn > 0)
    out.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  else if (warnings)
    ++*warnings;
  if (out.precision + out.recall > 0.0)
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

struct MacroMetrics {
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  // Harmonic mean of the two macro averages, not the mean of per-class F1
  // scores. The latter is still reported for transparency.
  double f1_macro = 0.0;
  double f1_macro_mean_of_class = 0.0;
};

inline MacroMetrics macro_metrics(const ConfusionMatrix& cm,
                                  std::size_t* warnings = nullptr) {
  MacroMetrics m;
  for (int g = 0; g < kNumGrades; ++g) {
    ClassPrf prf = per_class_prf(cm, g, warnings);
    m.precision_macro += prf.precision;
    m.recall_macro += prf.recall;
    m.f1_macro_mean_of_class += prf.f1;
  }
  m.precision_macro /= kNumGrades;
  m.recall_macro /= kNumGrades;
  m.f1_macro_mean_of_class /= kNumGrades;
  if (m.precision_macro + m.recall_macro > 0.0)
    m.f1_macro = 2.0 * m.precision_macro * m.recall_macro /
                 (m.precision_macro + m.recall_macro);
  return m;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

// Grade indices as header row and column; 11 data rows of 11 counts.
inline void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
  out << "true\\pred";
  for (int p = 0; p < kNumGrades; ++p) out << ',' << p;
  out << '\n';
  for (int t = 0; t < kNumGrades; ++t) {
    out << t;
    for (int p = 0; p < kNumGrades; ++p) out << ',' << cm.at(t, p);
    out << '\n';
  }
}

inline void write_confusion_csv(const std::string& path,
                                const ConfusionMatrix& cm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write confusion CSV '" + path + "'");
  write_confusion_csv(out, cm);
}

inline ConfusionMatrix read_confusion_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open confusion CSV '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw DataError(path + ": missing header row");
  ConfusionMatrix cm;
  for (int t = 0; t < kNumGrades; ++t) {
    if (!std::getline(in, line))
      throw DataError(path + ": truncated at grade row " + std::to_string(t));
    auto parts = split(trim(line), ',');
    if (parts.size() != kNumGrades + 1)
      throw DataError(path + ": grade row " + std::to_string(t) +
                      " has wrong arity");
    for (int p = 0; p < kNumGrades; ++p)
      cm.at(t, p) = parse_int(parts[static_cast<std::size_t>(p + 1)], path);
  }
  return cm;
}

}  // namespace vulnboost
