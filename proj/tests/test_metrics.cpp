#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>
#include <vector>

#include "vulnboost/metrics.hpp"

using namespace vulnboost;

namespace {

// Brute-force recomputation straight from the (truth, pred) pairs, bypassing
// the ConfusionMatrix bookkeeping entirely.
struct OracleMetrics {
  double accuracy = 0.0;
  double precision[11]{};
  double recall[11]{};
  double f1[11]{};
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  double f1_macro = 0.0;
};

OracleMetrics oracle_from_pairs(const std::vector<int>& truth,
                                const std::vector<int>& pred) {
  OracleMetrics m;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == pred[i];
  m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  for (int g = 0; g < 11; ++g) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (pred[i] == g && truth[i] == g) ++tp;
      if (pred[i] == g && truth[i] != g) ++fp;
      if (pred[i] != g && truth[i] == g) ++fn;
    }
    m.precision[g] = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
    m.recall[g] = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
    m.f1[g] = (m.precision[g] + m.recall[g] > 0)
                  ? 2 * m.precision[g] * m.recall[g] /
                        (m.precision[g] + m.recall[g])
                  : 0.0;
    m.precision_macro += m.precision[g] / 11.0;
    m.recall_macro += m.recall[g] / 11.0;
  }
  m.f1_macro = (m.precision_macro + m.recall_macro > 0)
                   ? 2 * m.precision_macro * m.recall_macro /
                         (m.precision_macro + m.recall_macro)
                   : 0.0;
  return m;
}

std::pair<std::vector<int>, std::vector<int>> random_pairs(std::size_t n,
                                                           std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<int> truth(n), pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    truth[i] = static_cast<int>(rng.next_index(11));
    // Correlate predictions loosely so the diagonal is populated.
    pred[i] = rng.next_unit() < 0.4
                  ? truth[i]
                  : static_cast<int>(rng.next_index(11));
  }
  return {truth, pred};
}

}  // namespace

TEST(Confusion, PerfectPredictionsAreDiagonal) {
  std::vector<int> truth = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 5, 5};
  ConfusionMatrix cm = confusion_matrix(truth, truth);
  for (int t = 0; t < 11; ++t)
    for (int p = 0; p < 11; ++p)
      if (t != p) EXPECT_EQ(cm.at(t, p), 0);
  EXPECT_EQ(cm.at(5, 5), 3);
  EXPECT_DOUBLE_EQ(accuracy(cm), 1.0);
}

TEST(Confusion, EmptyListsGiveZeroMatrix) {
  ConfusionMatrix cm = confusion_matrix({}, {});
  EXPECT_EQ(cm.total(), 0);
  EXPECT_THROW(accuracy(cm), DataError);
}

TEST(Confusion, RowSumsMatchTruthTally) {
  auto [truth, pred] = random_pairs(1000, 3);
  ConfusionMatrix cm = confusion_matrix(truth, pred);
  std::array<long, 11> tally{};
  for (int t : truth) tally[static_cast<std::size_t>(t)]++;
  for (int g = 0; g < 11; ++g)
    EXPECT_EQ(cm.row_sum(g), tally[static_cast<std::size_t>(g)]);
  EXPECT_EQ(cm.total(), 1000);
}

TEST(Confusion, InputValidation) {
  EXPECT_THROW(confusion_matrix({0, 1}, {0}), DataError);
  EXPECT_THROW(confusion_matrix({0, 11}, {0, 0}), DataError);
  EXPECT_THROW(confusion_matrix({0, -1}, {0, 0}), DataError);
}

TEST(Accuracy, BinarySubstitution) {
  // TP=3, TN=5, FP=1, FN=1 in the {0,1} corner: (3+5)/10.
  ConfusionMatrix cm;
  cm.at(1, 1) = 3;
  cm.at(0, 0) = 5;
  cm.at(0, 1) = 1;
  cm.at(1, 0) = 1;
  EXPECT_DOUBLE_EQ(accuracy(cm), 0.8);
}

TEST(PerClass, DegenerateZeroRule) {
  ConfusionMatrix cm;
  cm.at(0, 0) = 5;  // grade 7 never true, never predicted
  std::size_t warnings = 0;
  ClassPrf prf = per_class_prf(cm, 7, &warnings);
  EXPECT_EQ(prf.precision, 0.0);
  EXPECT_EQ(prf.recall, 0.0);
  EXPECT_EQ(prf.f1, 0.0);
  EXPECT_EQ(warnings, 2u);
}

TEST(PerClass, Substitution) {
  // grade 2: TP=2, FP=2, FN=0.
  ConfusionMatrix cm;
  cm.at(2, 2) = 2;
  cm.at(3, 2) = 2;
  ClassPrf prf = per_class_prf(cm, 2);
  EXPECT_DOUBLE_EQ(prf.precision, 0.5);
  EXPECT_DOUBLE_EQ(prf.recall, 1.0);
  EXPECT_NEAR(prf.f1, 2.0 / 3.0, 1e-15);
}

TEST(PerClass, MatchesOracleOnRandomMatrix) {
  auto [truth, pred] = random_pairs(500, 17);
  ConfusionMatrix cm = confusion_matrix(truth, pred);
  OracleMetrics oracle = oracle_from_pairs(truth, pred);
  for (int g = 0; g < 11; ++g) {
    ClassPrf prf = per_class_prf(cm, g);
    EXPECT_NEAR(prf.precision, oracle.precision[g], 1e-12);
    EXPECT_NEAR(prf.recall, oracle.recall[g], 1e-12);
    EXPECT_NEAR(prf.f1, oracle.f1[g], 1e-12);
  }
}

TEST(Macro, PerfectClassifier) {
  std::vector<int> truth;
  for (int c = 0; c < 11; ++c) truth.insert(truth.end(), 7, c);
  ConfusionMatrix cm = confusion_matrix(truth, truth);
  MacroMetrics m = macro_metrics(cm);
  EXPECT_DOUBLE_EQ(m.precision_macro, 1.0);
  EXPECT_DOUBLE_EQ(m.recall_macro, 1.0);
  EXPECT_DOUBLE_EQ(m.f1_macro, 1.0);
  EXPECT_DOUBLE_EQ(m.f1_macro_mean_of_class, 1.0);
}

TEST(Macro, ConstantPredictorAgainstUniformTruth) {
  std::vector<int> truth, pred;
  for (int c = 0; c < 11; ++c)
    for (int i = 0; i < 9; ++i) {
      truth.push_back(c);
      pred.push_back(4);
    }
  ConfusionMatrix cm = confusion_matrix(truth, pred);
  MacroMetrics m = macro_metrics(cm);
  OracleMetrics oracle = oracle_from_pairs(truth, pred);
  EXPECT_NEAR(m.precision_macro, oracle.precision_macro, 1e-12);
  EXPECT_NEAR(m.recall_macro, oracle.recall_macro, 1e-12);
  // Only grade 4 has nonzero precision (1/11) and recall (1).
  EXPECT_NEAR(m.precision_macro, (1.0 / 11.0) / 11.0, 1e-12);
  EXPECT_NEAR(m.recall_macro, 1.0 / 11.0, 1e-12);
}

TEST(Macro, HarmonicOfMacrosNotMeanOfF1) {
  auto [truth, pred] = random_pairs(800, 29);
  ConfusionMatrix cm = confusion_matrix(truth, pred);
  MacroMetrics m = macro_metrics(cm);
  double harmonic = 2.0 * m.precision_macro * m.recall_macro /
                    (m.precision_macro + m.recall_macro);
  EXPECT_NEAR(m.f1_macro, harmonic, 1e-12);
  // The two F1 conventions genuinely differ on skewed predictions.
  EXPECT_NE(m.f1_macro, m.f1_macro_mean_of_class);
}

TEST(Macro, MicroRecallEqualsAccuracy) {
  auto [truth, pred] = random_pairs(1000, 31);
  ConfusionMatrix cm = confusion_matrix(truth, pred);
  long tp_sum = 0;
  for (int g = 0; g < 11; ++g) tp_sum += cm.at(g, g);
  EXPECT_DOUBLE_EQ(static_cast<double>(tp_sum) / cm.total(), accuracy(cm));
}

TEST(Macro, PermutationInvariance) {
  auto [truth, pred] = random_pairs(300, 37);
  ConfusionMatrix cm1 = confusion_matrix(truth, pred);
  // Reverse both lists in lockstep.
  std::reverse(truth.begin(), truth.end());
  std::reverse(pred.begin(), pred.end());
  ConfusionMatrix cm2 = confusion_matrix(truth, pred);
  EXPECT_TRUE(cm1 == cm2);
}

TEST(Macro, AllMetricsWithinUnitInterval) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto [truth, pred] = random_pairs(50, seed + 100);
    ConfusionMatrix cm = confusion_matrix(truth, pred);
    MacroMetrics m = macro_metrics(cm);
    for (double v : {accuracy(cm), m.precision_macro, m.recall_macro,
                     m.f1_macro, m.f1_macro_mean_of_class}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(ConfusionCsv, RoundTrip) {
  auto [truth, pred] = random_pairs(200, 41);
  ConfusionMatrix cm = confusion_matrix(truth, pred);
  std::string path =
      (std::filesystem::temp_directory_path() / "vb_cm.csv").string();
  write_confusion_csv(path, cm);
  ConfusionMatrix back = read_confusion_csv(path);
  EXPECT_TRUE(cm == back);
  std::filesystem::remove(path);
}
