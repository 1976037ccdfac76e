#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vulnboost/dataset.hpp"
#include "vulnboost/metrics.hpp"
#include "vulnboost/ovr.hpp"
#include "vulnboost/qpso.hpp"
#include "vulnboost/smote.hpp"
#include "vulnboost/synth.hpp"

namespace vulnboost {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct PipelineConfig {
  std::string input_csv;
  std::string schema_path;
  std::string output_dir = "out";
  double test_fraction = 0.2;
  bool smote_enabled = true;
  int smote_k = 5;
  bool tune = false;
  QpsoConfig qpso{30, 20, 1.0, 0.5, 0};
  bool paper_ranges = false;  // full Table-sized n_estimators box
  int cv_folds = 3;
  std::uint64_t seed = 0;
  GbdtParams base_params;

  void validate() const {
    if (input_csv.empty()) throw ConfigError("input CSV path is required");
    if (schema_path.empty()) throw ConfigError("schema path is required");
    if (output_dir.empty()) throw ConfigError("output directory is required");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
      throw ConfigError("test_fraction must lie in (0,1)");
    if (cv_folds < 2) throw ConfigError("cv_folds must be >= 2");
    if (smote_k < 1) throw ConfigError("smote_k must be >= 1");
    qpso.validate();
    base_params.validate();
  }

  SearchSpace search_space() const {
    return paper_ranges ? SearchSpace::gbdt_default() : SearchSpace::gbdt_desk();
  }
};

inline bool parse_bool(const std::string& v, const std::string& what) {
  if (iequals(v, "true") || v == "1" || iequals(v, "yes")) return true;
  if (iequals(v, "false") || v == "0" || iequals(v, "no")) return false;
  throw ConfigError("cannot parse boolean '" + v + "' for " + what);
}

/// `key = value` lines with `#` comments.
inline void apply_config_file(const std::string& path, PipelineConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    std::string where = path + ":" + std::to_string(lineno);
    try {
      if (key == "input")
        cfg.input_csv = value;
      else if (key == "schema")
        cfg.schema_path = value;
      else if (key == "output_dir")
        cfg.output_dir = value;
      else if (key == "seed")
        cfg.seed = static_cast<std::uint64_t>(parse_int(value, where));
      else if (key == "test_fraction")
        cfg.test_fraction = parse_real(value, where);
      else if (key == "tune")
        cfg.tune = parse_bool(value, key);
      else if (key == "smote")
        cfg.smote_enabled = parse_bool(value, key);
      else if (key == "smote_k")
        cfg.smote_k = static_cast<int>(parse_int(value, where));
      else if (key == "particles")
        cfg.qpso.n_particles = static_cast<int>(parse_int(value, where));
      else if (key == "iterations")
        cfg.qpso.n_iterations = static_cast<int>(parse_int(value, where));
      else if (key == "cv_folds")
        cfg.cv_folds = static_cast<int>(parse_int(value, where));
      else if (key == "paper_ranges")
        cfg.paper_ranges = parse_bool(value, key);
      else
        throw ConfigError(where + ": unknown config key '" + key + "'");
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
  }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct RunMetrics {
  double accuracy = 0.0;
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  double f1_macro = 0.0;
  double f1_macro_mean_of_class = 0.0;
};

struct RunReport {
  GbdtParams params_used;
  RunMetrics metrics;
  ConfusionMatrix confusion;
  std::vector<double> tuning_history;  // empty without tuning
  std::vector<std::pair<std::string, double>> timings;  // stage, seconds
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::size_t balanced_rows = 0;
  std::size_t warnings = 0;
};

inline RunMetrics metrics_from(const ConfusionMatrix& cm,
                               std::size_t* warnings = nullptr) {
  RunMetrics m;
  m.accuracy = accuracy(cm);
  MacroMetrics mm = macro_metrics(cm, warnings);
  m.precision_macro = mm.precision_macro;
  m.recall_macro = mm.recall_macro;
  m.f1_macro = mm.f1_macro;
  m.f1_macro_mean_of_class = mm.f1_macro_mean_of_class;
  return m;
}

// Deliberately free of wall-clock content so identical runs produce
// byte-identical files; timings go to a separate file.
inline void write_report(std::ostream& out, const RunReport& report) {
  const GbdtParams& p = report.params_used;
  out << "vulnboost training report\n";
  out << "=========================\n\n";
  out << "rows:\n";
  out << "  train = " << report.train_rows << '\n';
  out << "  train_balanced = " << report.balanced_rows << '\n';
  out << "  test = " << report.test_rows << '\n';
  out << "  encoding_warnings = " << report.warnings << '\n';
  out << "\nparameters_used:\n";
  out << "  learning_rate = " << format_real(p.learning_rate) << '\n';
  out << "  n_estimators = " << p.n_estimators << '\n';
  out << "  max_depth = " << p.max_depth << '\n';
  out << "  num_leaves = " << p.num_leaves << '\n';
  out << "  feature_fraction = " << format_real(p.feature_fraction) << '\n';
  out << "  bagging_fraction = " << format_real(p.bagging_fraction) << '\n';
  out << "  lambda_l2 = " << format_real(p.lambda_l2) << '\n';
  out << "  gamma_leaf = " << format_real(p.gamma_leaf) << '\n';
  out << "  min_data_in_leaf = " << p.min_data_in_leaf << '\n';
  out << "  max_bins = " << p.max_bins << '\n';
  out << "  seed = " << p.seed << '\n';
  out << "\ntest_metrics:\n";
  out << "  accuracy = " << format_real(report.metrics.accuracy) << '\n';
  out << "  precision_macro = " << format_real(report.metrics.precision_macro)
      << '\n';
  out << "  recall_macro = " << format_real(report.metrics.recall_macro)
      << '\n';
  out << "  f1_macro = " << format_real(report.metrics.f1_macro) << '\n';
  out << "  f1_macro_mean_of_class = "
      << format_real(report.metrics.f1_macro_mean_of_class) << '\n';

  char buf[256];
  out << "\nsummary_percent:\n";
  out << "  accuracy  precision  recall  f1\n";
  std::snprintf(buf, sizeof(buf), "  %-9.2f %-10.2f %-7.2f %-7.2f\n",
                100.0 * report.metrics.accuracy,
                100.0 * report.metrics.precision_macro,
                100.0 * report.metrics.recall_macro,
                100.0 * report.metrics.f1_macro);
  out << buf;

  out << "\nper_class:\n";
  out << "  grade  precision             recall                f1            "
         "        support\n";
  for (int g = 0; g < kNumGrades; ++g) {
    ClassPrf prf = per_class_prf(report.confusion, g);
    std::snprintf(buf, sizeof(buf), "  %-6d %-21.17g %-21.17g %-21.17g %lld\n",
                  g, prf.precision, prf.recall, prf.f1,
                  static_cast<long long>(report.confusion.row_sum(g)));
    out << buf;
  }
  if (!report.tuning_history.empty()) {
    out << "\ntuning_best_fitness_history:\n";
    for (std::size_t t = 0; t < report.tuning_history.size(); ++t)
      out << "  " << t << " = " << format_real(report.tuning_history[t])
          << '\n';
  }
}

/// Parses the `key = value` metric lines back out of a report, for
/// cross-checking against the persisted confusion matrix.
inline RunMetrics read_report_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report '" + path + "'");
  RunMetrics m;
  std::string line;
  auto grab = [&](const std::string& key, double& slot) {
    std::string t = trim(line);
    std::string prefix = key + " = ";
    if (t.rfind(prefix, 0) == 0) slot = parse_real(t.substr(prefix.size()), path);
  };
  while (std::getline(in, line)) {
    grab("accuracy", m.accuracy);
    grab("precision_macro", m.precision_macro);
    grab("recall_macro", m.recall_macro);
    grab("f1_macro", m.f1_macro);
    grab("f1_macro_mean_of_class", m.f1_macro_mean_of_class);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Encoder persistence
// ---------------------------------------------------------------------------

// Schema and fitted encoder travel with the model directory so later
// evaluate/predict calls can re-encode raw CSVs.
inline void save_encoder_file(const std::string& path,
                              const FeatureSchema& schema,
                              const LabelEncoder& encoder) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write encoder file '" + path + "'");
  out << "format=vulnboost-encoder/1\n";
  out << "schema_begin\n" << schema.serialize() << "schema_end\n";
  out << encoder.serialize();
}

inline std::pair<FeatureSchema, LabelEncoder> load_encoder_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open encoder file '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != "format=vulnboost-encoder/1")
    throw DataError(path + ": not a vulnboost-encoder/1 file");
  if (!std::getline(in, line) || trim(line) != "schema_begin")
    throw DataError(path + ": missing schema section");
  std::ostringstream schema_text;
  while (std::getline(in, line)) {
    if (trim(line) == "schema_end") break;
    schema_text << line << '\n';
  }
  std::istringstream schema_in(schema_text.str());
  FeatureSchema schema = FeatureSchema::parse(schema_in, path);
  LabelEncoder encoder = LabelEncoder::parse(in, path);
  return {std::move(schema), std::move(encoder)};
}

// ---------------------------------------------------------------------------
// Training run
// ---------------------------------------------------------------------------

namespace detail {

class StageClock {
 public:
  explicit StageClock(RunReport& report) : report_(report) {}

  template <typename Fn>
  auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
    auto start = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        finish(name, start);
      } else {
        auto out = fn();
        finish(name, start);
        return out;
      }
    } catch (const ConfigError& e) {
      throw ConfigError("stage " + name + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("stage " + name + ": " + e.what());
    } catch (const std::exception& e) {
      throw InternalError("stage " + name + ": " + e.what());
    }
  }

 private:
  void finish(const std::string& name,
              std::chrono::steady_clock::time_point start) {
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    report_.timings.emplace_back(name, secs);
  }

  RunReport& report_;
};

inline EncodedDataset subset_by_fold(const EncodedDataset& ds,
                                     const std::vector<int>& folds, int fold,
                                     bool keep_equal) {
  std::vector<char> mask(ds.size());
  for (std::size_t r = 0; r < ds.size(); ++r)
    mask[r] = (folds[r] == fold) == keep_equal ? 1 : 0;
  EncodedDataset out;
  out.schema = ds.schema;
  out.encoder = ds.encoder;
  std::size_t n = 0;
  for (char m : mask) n += m;
  out.features = Matrix(n, ds.features.cols);
  out.labels.reserve(n);
  std::size_t w = 0;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    if (!mask[r]) continue;
    for (std::size_t c = 0; c < ds.features.cols; ++c)
      out.features.at(w, c) = ds.features.at(r, c);
    out.labels.push_back(ds.labels[r]);
    ++w;
  }
  return out;
}

inline double ovr_accuracy(const OvrModel& model, const EncodedDataset& ds) {
  if (ds.size() == 0) throw DataError("empty evaluation set");
  std::size_t correct = 0;
  for (std::size_t r = 0; r < ds.size(); ++r)
    if (predict_class(model, ds.features.row(r), ds.features.cols) ==
        ds.labels[r])
      ++correct;
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

// Removes everything this run wrote, best effort, so failed runs leave no
// partial outputs behind.
class OutputJanitor {
 public:
  explicit OutputJanitor(std::string dir) : dir_(std::move(dir)) {}

  void arm() { armed_ = true; }
  void disarm() { armed_ = false; }

  ~OutputJanitor() {
    if (!armed_) return;
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::remove_all(fs::path(dir_) / "models", ec);
    for (const char* f : {"confusion.csv", "report.txt", "tuning_trace.csv",
                          "timings.txt"})
      fs::remove(fs::path(dir_) / f, ec);
  }

 private:
  std::string dir_;
  bool armed_ = false;
};

}  // namespace detail

/// Mean accuracy of stratified cross-validation for one decoded parameter
/// point, negated so QPSO minimizes. Pure in (data, folds, position, seed).
inline double cv_fitness(const EncodedDataset& balanced_train,
                         const std::vector<int>& folds, int n_folds,
                         const std::vector<double>& position,
                         const SearchSpace& space, const GbdtParams& base) {
  GbdtParams params = decode_params(position, space, base);
  double sum = 0.0;
  for (int f = 0; f < n_folds; ++f) {
    EncodedDataset fit = detail::subset_by_fold(balanced_train, folds, f, false);
    EncodedDataset hold = detail::subset_by_fold(balanced_train, folds, f, true);
    OvrModel model = train_ovr(fit, params);
    sum += detail::ovr_accuracy(model, hold);
  }
  return -(sum / static_cast<double>(n_folds));
}

/// The end-to-end experiment: canonicalize, stratified 80/20 split on raw
/// labels, train-only encoder fitting, SMOTE on the training partition,
/// optional QPSO parameter search with cross-validated accuracy as fitness,
/// one-vs-rest training, evaluation on the untouched test partition, and
/// persistence of every artifact. Deterministic from the seed; test rows
/// never reach encoder fitting, SMOTE, binning, or the tuner.
inline RunReport run_train(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  cfg.validate();
  RunReport report;
  detail::StageClock clock(report);

  FeatureSchema schema = clock.stage(
      "load-schema", [&] { return FeatureSchema::load(cfg.schema_path); });
  std::vector<RawAssetRecord> raw = clock.stage(
      "load-csv", [&] { return load_raw_csv(cfg.input_csv, schema); });

  // Row-local treatment plus label validation; no fitted state yet.
  auto [canon, labels] = clock.stage("encode", [&] {
    for (std::size_t r = 0; r < raw.size(); ++r)
      if (!raw[r].labeled(schema))
        throw DataError("row " + std::to_string(r + 2) + ": missing score");
    auto records = canonicalize_records(std::move(raw), schema,
                                        &report.warnings);
    std::vector<int> parsed(records.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
      long v = parse_int(records[r].values.back(),
                         "row " + std::to_string(r + 2) + ", column Score");
      if (v < 0 || v >= kNumGrades)
        throw DataError("row " + std::to_string(r + 2) + ": score " +
                        std::to_string(v) + " outside 0..10");
      parsed[r] = static_cast<int>(v);
    }
    return std::make_pair(std::move(records), std::move(parsed));
  });

  auto [train_ds, test_ds] = clock.stage("split", [&] {
    auto mask = stratified_test_mask(labels, cfg.test_fraction, cfg.seed);
    std::vector<RawAssetRecord> train_raw, test_raw;
    for (std::size_t r = 0; r < canon.size(); ++r)
      (mask[r] ? test_raw : train_raw).push_back(canon[r]);
    // Encoder fitted on the training partition only; test categories unseen
    // in training take the reserved code.
    LabelEncoder encoder = fit_label_encoder(train_raw, schema);
    EncodedDataset train = apply_encoding(train_raw, schema, encoder, false,
                                          &report.warnings);
    EncodedDataset test = apply_encoding(test_raw, schema, encoder, true,
                                         &report.warnings);
    return std::make_pair(std::move(train), std::move(test));
  });
  report.train_rows = train_ds.size();
  report.test_rows = test_ds.size();

  EncodedDataset balanced = clock.stage("smote", [&] {
    if (!cfg.smote_enabled) return train_ds;
    SmoteConfig sc;
    sc.k_neighbors = cfg.smote_k;
    sc.seed = cfg.seed;
    return smote_oversample(train_ds, sc).first;
  });
  report.balanced_rows = balanced.size();

  GbdtParams params = cfg.base_params;
  params.seed = cfg.seed;
  OptimizeResult tuning;
  if (cfg.tune) {
    clock.stage("tune", [&] {
      SearchSpace space = cfg.search_space();
      std::vector<int> folds =
          stratified_folds(balanced.labels, cfg.cv_folds, cfg.seed);
      QpsoConfig qcfg = cfg.qpso;
      qcfg.seed = cfg.seed;
      tuning = optimize(
          [&](const std::vector<double>& x) {
            return cv_fitness(balanced, folds, cfg.cv_folds, x, space, params);
          },
          space, qcfg);
      params = decode_params(tuning.best, space, params);
      report.tuning_history = tuning.history;
    });
  }
  report.params_used = params;

  OvrModel model =
      clock.stage("train", [&] { return train_ovr(balanced, params); });

  clock.stage("evaluate", [&] {
    if (test_ds.size() == 0) throw DataError("test partition is empty");
    std::vector<int> pred(test_ds.size());
    parallel_for(test_ds.size(), [&](std::size_t r) {
      pred[r] =
          predict_class(model, test_ds.features.row(r), test_ds.features.cols);
    });
    report.confusion = confusion_matrix(test_ds.labels, pred);
    report.metrics = metrics_from(report.confusion);
  });

  detail::OutputJanitor janitor(cfg.output_dir);
  clock.stage("persist", [&] {
    janitor.arm();
    fs::create_directories(cfg.output_dir);
    std::string model_dir = (fs::path(cfg.output_dir) / "models").string();
    save_ovr(model, model_dir, schema.fingerprint());
    save_encoder_file((fs::path(model_dir) / "encoder.txt").string(), schema,
                      balanced.encoder);
    write_confusion_csv((fs::path(cfg.output_dir) / "confusion.csv").string(),
                        report.confusion);
    std::ofstream rep(fs::path(cfg.output_dir) / "report.txt",
                      std::ios::binary);
    if (!rep) throw DataError("cannot write report.txt");
    write_report(rep, report);
    if (cfg.tune) {
      std::ofstream trace(fs::path(cfg.output_dir) / "tuning_trace.csv",
                          std::ios::binary);
      if (!trace) throw DataError("cannot write tuning_trace.csv");
      write_tuning_trace(trace, tuning, cfg.search_space());
    }
    std::ofstream times(fs::path(cfg.output_dir) / "timings.txt");
    for (const auto& [name, secs] : report.timings)
      times << name << " = " << secs << " s\n";
    janitor.disarm();
  });
  return report;
}

// ---------------------------------------------------------------------------
// Evaluation and prediction on persisted models
// ---------------------------------------------------------------------------

inline RunReport run_evaluate(const std::string& model_dir,
                              const std::string& test_csv,
                              const std::string& schema_path,
                              const std::string& output_dir = "") {
  namespace fs = std::filesystem;
  FeatureSchema schema = FeatureSchema::load(schema_path);
  std::uint64_t want = read_manifest_schema_hash(model_dir);
  if (schema.fingerprint() != want)
    throw DataError("schema fingerprint mismatch: model was trained against a "
                    "different schema");
  auto [stored_schema, encoder] =
      load_encoder_file((fs::path(model_dir) / "encoder.txt").string());
  OvrModel model = load_ovr(model_dir);

  RunReport report;
  report.params_used = model.classifiers.front().params;
  auto raw = load_raw_csv(test_csv, schema);
  if (raw.empty()) throw DataError(test_csv + ": no data rows to evaluate");
  auto canon = canonicalize_records(std::move(raw), schema, &report.warnings);
  EncodedDataset ds =
      apply_encoding(canon, schema, encoder, true, &report.warnings);
  if (ds.labels.empty())
    throw DataError(test_csv + ": evaluation needs labeled rows");
  report.test_rows = ds.size();

  std::vector<int> pred(ds.size());
  parallel_for(ds.size(), [&](std::size_t r) {
    pred[r] = predict_class(model, ds.features.row(r), ds.features.cols);
  });
  report.confusion = confusion_matrix(ds.labels, pred);
  report.metrics = metrics_from(report.confusion);

  if (!output_dir.empty()) {
    fs::create_directories(output_dir);
    write_confusion_csv((fs::path(output_dir) / "confusion.csv").string(),
                        report.confusion);
    std::ofstream rep(fs::path(output_dir) / "report.txt", std::ios::binary);
    if (!rep) throw DataError("cannot write report.txt");
    write_report(rep, report);
  }
  return report;
}

/// Per-row grade, +/-1 code word, and the 11 probabilities, CSV on `out`.
/// Input rows may be labeled (labels are ignored) or unlabeled.
inline void run_predict(const std::string& model_dir,
                        const std::string& input_csv, std::ostream& out) {
  namespace fs = std::filesystem;
  auto [schema, encoder] =
      load_encoder_file((fs::path(model_dir) / "encoder.txt").string());
  OvrModel model = load_ovr(model_dir);

  std::size_t warnings = 0;
  auto raw = load_raw_csv(input_csv, schema);
  auto canon = canonicalize_records(std::move(raw), schema, &warnings);
  // Strip labels if present so encoding treats rows as unlabeled.
  for (auto& rec : canon)
    if (rec.values.size() == schema.size() + 1) rec.values.pop_back();
  EncodedDataset ds = apply_encoding(canon, schema, encoder, true, &warnings);

  out << "grade";
  for (int g = 0; g < kNumGrades; ++g) out << ",enc_" << g;
  for (int g = 0; g < kNumGrades; ++g) out << ",prob_" << g;
  out << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const double* row = ds.features.row(r);
    auto probs = model.predict_probabilities(row, ds.features.cols);
    int grade = predict_class(model, row, ds.features.cols);
    out << grade;
    for (double p : probs) out << ',' << (p >= 0.5 ? 1 : -1);
    for (double p : probs) out << ',' << format_real(p);
    out << '\n';
  }
}

inline void run_predict(const std::string& model_dir,
                        const std::string& input_csv,
                        const std::string& out_csv) {
  std::ofstream out(out_csv, std::ios::binary);
  if (!out) throw DataError("cannot write prediction CSV '" + out_csv + "'");
  run_predict(model_dir, input_csv, out);
}

}  // namespace vulnboost
