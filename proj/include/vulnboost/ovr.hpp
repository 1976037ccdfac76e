#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "vulnboost/gbdt.hpp"

namespace vulnboost {

/// The disassembled multiclass model: one binary classifier per grade, all
/// trained on the same feature schema with shared parameters.
struct OvrModel {
  std::vector<GbdtModel> classifiers;  // index = grade

  std::size_t n_features() const {
    return classifiers.empty() ? 0 : classifiers.front().n_features();
  }

  std::array<double, 11> predict_probabilities(const double* row,
                                               std::size_t arity) const {
    if (classifiers.size() != kNumGrades)
      throw InternalError("one-vs-rest model must hold 11 classifiers");
    std::array<double, 11> probs{};
    for (int g = 0; g < kNumGrades; ++g)
      probs[static_cast<std::size_t>(g)] =
          classifiers[static_cast<std::size_t>(g)].predict_proba(row, arity);
    return probs;
  }
};

/// Label view for one grade's binary task: 1 where the grade matches, else
/// 0. Features are shared, not copied per spec row; the caller must reject
/// all-zero views before training.
inline EncodedDataset binarize_labels(const EncodedDataset& ds, int grade) {
  if (grade < 0 || grade >= kNumGrades)
    throw ConfigError("grade must lie in 0..10");
  EncodedDataset out = ds;
  for (auto& label : out.labels) label = (label == grade) ? 1 : 0;
  return out;
}

/// Eleven independent binary trainings with per-grade derived seeds
/// (seed + grade). Requires every grade present; grades may train in
/// parallel without changing the result.
inline OvrModel train_ovr(const EncodedDataset& train,
                          const GbdtParams& params) {
  std::array<bool, 11> present{};
  for (int label : train.labels) {
    if (label < 0 || label >= kNumGrades)
      throw DataError("label outside 0..10");
    present[static_cast<std::size_t>(label)] = true;
  }
  for (int g = 0; g < kNumGrades; ++g)
    if (!present[static_cast<std::size_t>(g)])
      throw DataError("grade " + std::to_string(g) +
                      " missing from training data");

  OvrModel model;
  model.classifiers.resize(kNumGrades);
  parallel_for(kNumGrades, [&](std::size_t g) {
    GbdtParams grade_params = params;
    grade_params.seed = params.seed + g;
    model.classifiers[g] =
        train_binary(binarize_labels(train, static_cast<int>(g)), grade_params);
  });
  return model;
}

/// The +/-1 code word: +1 where the grade's classifier fires (probability
/// >= 0.5, boundary counted as positive), else -1.
inline std::array<int, 11> predict_encoding(const OvrModel& model,
                                            const double* row,
                                            std::size_t arity) {
  auto probs = model.predict_probabilities(row, arity);
  std::array<int, 11> code{};
  for (std::size_t g = 0; g < code.size(); ++g)
    code[g] = probs[g] >= 0.5 ? 1 : -1;
  return code;
}

/// Decoded grade: argmax of the 11 probabilities, lowest grade on ties.
/// Subsumes the clean one-hot code word and stays defined when zero or
/// several classifiers fire.
inline int predict_class(const OvrModel& model, const double* row,
                         std::size_t arity) {
  auto probs = model.predict_probabilities(row, arity);
  int best = 0;
  for (int g = 1; g < kNumGrades; ++g)
    if (probs[static_cast<std::size_t>(g)] >
        probs[static_cast<std::size_t>(best)])
      best = g;
  return best;
}

// ---------------------------------------------------------------------------
// Model directory
// ---------------------------------------------------------------------------

inline std::string grade_model_filename(int grade) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "grade_%02d.model", grade);
  return buf;
}

/// Writes grade_00.model .. grade_10.model plus a manifest recording the
/// schema fingerprint and the shared training parameters.
inline void save_ovr(const OvrModel& model, const std::string& dir,
                     std::uint64_t schema_hash) {
  namespace fs = std::filesystem;
  if (model.classifiers.size() != kNumGrades)
    throw InternalError("one-vs-rest model must hold 11 classifiers");
  fs::create_directories(dir);
  for (int g = 0; g < kNumGrades; ++g)
    save_model(model.classifiers[static_cast<std::size_t>(g)],
               (fs::path(dir) / grade_model_filename(g)).string());

  std::ofstream out(fs::path(dir) / "manifest", std::ios::binary);
  if (!out) throw DataError("cannot write manifest in '" + dir + "'");
  char hash_buf[32];
  std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                static_cast<unsigned long long>(schema_hash));
  const GbdtParams& p = model.classifiers.front().params;
  out << "format=vulnboost-ovr/1\n";
  out << "n_classes=" << kNumGrades << '\n';
  out << "schema_hash=" << hash_buf << '\n';
  out << "param.learning_rate=" << format_real(p.learning_rate) << '\n';
  out << "param.n_estimators=" << p.n_estimators << '\n';
  out << "param.max_depth=" << p.max_depth << '\n';
  out << "param.num_leaves=" << p.num_leaves << '\n';
  out << "param.feature_fraction=" << format_real(p.feature_fraction) << '\n';
  out << "param.bagging_fraction=" << format_real(p.bagging_fraction) << '\n';
  out << "param.lambda_l2=" << format_real(p.lambda_l2) << '\n';
  out << "param.gamma_leaf=" << format_real(p.gamma_leaf) << '\n';
  out << "param.min_data_in_leaf=" << p.min_data_in_leaf << '\n';
  out << "param.max_bins=" << p.max_bins << '\n';
  out << "param.seed=" << p.seed << '\n';
}

inline std::uint64_t read_manifest_schema_hash(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "manifest");
  if (!in) throw DataError("cannot open manifest in '" + dir + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != "format=vulnboost-ovr/1")
    throw DataError(dir + "/manifest: not a vulnboost-ovr/1 manifest");
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.rfind("schema_hash=", 0) == 0) {
      return std::strtoull(t.substr(12).c_str(), nullptr, 16);
    }
  }
  throw DataError(dir + "/manifest: missing schema_hash");
}

inline OvrModel load_ovr(const std::string& dir) {
  namespace fs = std::filesystem;
  read_manifest_schema_hash(dir);  // validates manifest presence and format
  OvrModel model;
  model.classifiers.reserve(kNumGrades);
  for (int g = 0; g < kNumGrades; ++g)
    model.classifiers.push_back(
        load_model((fs::path(dir) / grade_model_filename(g)).string()));
  return model;
}

}  // namespace vulnboost
