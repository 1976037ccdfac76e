// vulnboost command line: synthesize data, encode it, train the tuned
// one-vs-rest model, evaluate, and predict.

#include <array>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vulnboost/vulnboost.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

std::array<double, 11> parse_weights(const std::string& csv) {
  auto parts = vulnboost::split(csv, ',');
  if (parts.size() != 11)
    throw vulnboost::ConfigError("--weights needs 11 comma-separated values");
  std::array<double, 11> w{};
  for (std::size_t i = 0; i < 11; ++i)
    w[i] = vulnboost::parse_real(vulnboost::trim(parts[i]), "--weights");
  return w;
}

void print_report_summary(const vulnboost::RunReport& report) {
  std::printf("accuracy          = %.4f\n", report.metrics.accuracy);
  std::printf("precision_macro   = %.4f\n", report.metrics.precision_macro);
  std::printf("recall_macro      = %.4f\n", report.metrics.recall_macro);
  std::printf("f1_macro          = %.4f\n", report.metrics.f1_macro);
  for (const auto& [stage, secs] : report.timings)
    std::printf("time %-12s = %.2f s\n", stage.c_str(), secs);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vulnboost: network-asset vulnerability grading"};
  app.require_subcommand(1);

  // Global knobs shared by the subcommands.
  std::uint64_t seed = 0;
  std::string config_path;
  std::string output_dir = "out";
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  app.add_option("--config", config_path,
                 "key = value config file (# comments)");
  app.add_option("--output-dir", output_dir, "output directory")
      ->capture_default_str();
  app.fallthrough();

  // synth ------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled CSV");
  std::size_t synth_rows = 5000;
  std::string synth_out = "synth.csv";
  std::string synth_schema_out;
  std::string synth_weights;
  synth->add_option("--rows", synth_rows, "number of rows (>= 110)")
      ->capture_default_str();
  synth->add_option("--out", synth_out, "output CSV path")
      ->capture_default_str();
  synth->add_option("--schema-out", synth_schema_out,
                    "also write the default schema file here");
  synth->add_option("--weights", synth_weights,
                    "11 class weights, comma separated (default: skewed)");

  // encode -----------------------------------------------------------------
  auto* encode = app.add_subcommand("encode", "encode a raw CSV numerically");
  std::string encode_input, encode_schema, encode_out = "encoded.csv";
  encode->add_option("--input", encode_input, "raw CSV")->required();
  encode->add_option("--schema", encode_schema, "schema file")->required();
  encode->add_option("--out", encode_out, "encoded CSV path")
      ->capture_default_str();

  // train ------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "run the training pipeline");
  std::string train_input, train_schema;
  double test_fraction = 0.2;
  bool tune = false, no_smote = false, paper_ranges = false;
  int smote_k = 5, particles = 30, iterations = 20, cv_folds = 3;
  train->add_option("--input", train_input, "labeled raw CSV");
  train->add_option("--schema", train_schema, "schema file");
  train->add_option("--test-fraction", test_fraction,
                    "held-out fraction for the test set")
      ->capture_default_str();
  train->add_flag("--tune", tune, "run the swarm parameter search");
  train->add_flag("--no-smote", no_smote, "skip minority oversampling");
  train->add_option("--smote-k", smote_k, "SMOTE neighbor count")
      ->capture_default_str();
  train->add_option("--particles", particles, "swarm size")
      ->capture_default_str();
  train->add_option("--iterations", iterations, "swarm iterations")
      ->capture_default_str();
  train->add_option("--cv-folds", cv_folds, "cross-validation folds")
      ->capture_default_str();
  train->add_flag("--paper-ranges", paper_ranges,
                  "search the full n_estimators range [1000,3000]");

  // evaluate ---------------------------------------------------------------
  auto* evaluate = app.add_subcommand("evaluate",
                                      "score a model on a labeled CSV");
  std::string eval_model_dir, eval_input, eval_schema;
  evaluate->add_option("--model-dir", eval_model_dir, "model directory")
      ->required();
  evaluate->add_option("--input", eval_input, "labeled raw CSV")->required();
  evaluate->add_option("--schema", eval_schema, "schema file")->required();

  // predict ----------------------------------------------------------------
  auto* predict = app.add_subcommand("predict", "grade unlabeled rows");
  std::string pred_model_dir, pred_input, pred_out = "predictions.csv";
  predict->add_option("--model-dir", pred_model_dir, "model directory")
      ->required();
  predict->add_option("--input", pred_input, "raw CSV (labels ignored)")
      ->required();
  predict->add_option("--out", pred_out, "prediction CSV path")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (synth->parsed()) {
      std::array<double, 11> weights = vulnboost::kDefaultSkewWeights;
      if (!synth_weights.empty()) weights = parse_weights(synth_weights);
      auto records = vulnboost::synth_dataset(synth_rows, weights, seed);
      auto schema = vulnboost::FeatureSchema::asset_default();
      vulnboost::write_raw_csv(synth_out, records, schema, true);
      if (!synth_schema_out.empty()) schema.save(synth_schema_out);
      std::printf("wrote %zu rows to %s\n", records.size(), synth_out.c_str());
      return 0;
    }

    if (encode->parsed()) {
      auto schema = vulnboost::FeatureSchema::load(encode_schema);
      auto records = vulnboost::load_raw_csv(encode_input, schema);
      std::size_t warnings = 0;
      auto ds = vulnboost::encode_dataset(records, schema, &warnings);
      std::ofstream out(encode_out, std::ios::binary);
      if (!out)
        throw vulnboost::DataError("cannot write '" + encode_out + "'");
      for (std::size_t c = 0; c < schema.size(); ++c)
        out << schema.column(c).name << ',';
      out << vulnboost::kLabelColumn << '\n';
      for (std::size_t r = 0; r < ds.size(); ++r) {
        for (std::size_t c = 0; c < ds.features.cols; ++c)
          out << vulnboost::format_real(ds.features.at(r, c)) << ',';
        out << ds.labels[r] << '\n';
      }
      std::printf("encoded %zu rows to %s (%zu warnings)\n", ds.size(),
                  encode_out.c_str(), warnings);
      return 0;
    }

    if (train->parsed()) {
      vulnboost::PipelineConfig cfg;
      if (!config_path.empty()) vulnboost::apply_config_file(config_path, cfg);
      if (!train_input.empty()) cfg.input_csv = train_input;
      if (!train_schema.empty()) cfg.schema_path = train_schema;
      if (app.count("--output-dir") || cfg.output_dir.empty())
        cfg.output_dir = output_dir;
      if (app.count("--seed")) cfg.seed = seed;
      if (train->count("--test-fraction")) cfg.test_fraction = test_fraction;
      if (tune) cfg.tune = true;
      if (no_smote) cfg.smote_enabled = false;
      if (train->count("--smote-k")) cfg.smote_k = smote_k;
      if (train->count("--particles")) cfg.qpso.n_particles = particles;
      if (train->count("--iterations")) cfg.qpso.n_iterations = iterations;
      if (train->count("--cv-folds")) cfg.cv_folds = cv_folds;
      if (paper_ranges) cfg.paper_ranges = true;
      auto report = vulnboost::run_train(cfg);
      print_report_summary(report);
      std::printf("artifacts in %s\n", cfg.output_dir.c_str());
      return 0;
    }

    if (evaluate->parsed()) {
      auto report = vulnboost::run_evaluate(eval_model_dir, eval_input,
                                            eval_schema, output_dir);
      print_report_summary(report);
      return 0;
    }

    if (predict->parsed()) {
      vulnboost::run_predict(pred_model_dir, pred_input, pred_out);
      std::printf("predictions written to %s\n", pred_out.c_str());
      return 0;
    }
  } catch (const vulnboost::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const vulnboost::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const vulnboost::InternalError& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
  return 0;
}
