#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vulnboost/dataset.hpp"

namespace vulnboost {

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

struct GbdtParams {
  double learning_rate = 0.1;
  int n_estimators = 100;
  int max_depth = 6;
  int num_leaves = 31;
  double feature_fraction = 1.0;
  double bagging_fraction = 1.0;
  double lambda_l2 = 1.0;   // quadratic penalty on leaf values
  double gamma_leaf = 0.0;  // per-leaf penalty
  int min_data_in_leaf = 20;
  int max_bins = 255;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0))
      throw ConfigError("learning_rate must be positive");
    if (n_estimators < 0) throw ConfigError("n_estimators must be >= 0");
    if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
    if (num_leaves < 2) throw ConfigError("num_leaves must be >= 2");
    if (!(feature_fraction > 0.0 && feature_fraction <= 1.0))
      throw ConfigError("feature_fraction must lie in (0,1]");
    if (!(bagging_fraction > 0.0 && bagging_fraction <= 1.0))
      throw ConfigError("bagging_fraction must lie in (0,1]");
    if (lambda_l2 < 0.0) throw ConfigError("lambda_l2 must be >= 0");
    if (gamma_leaf < 0.0) throw ConfigError("gamma_leaf must be >= 0");
    if (min_data_in_leaf < 1)
      throw ConfigError("min_data_in_leaf must be >= 1");
    if (max_bins < 2 || max_bins > 65535)
      throw ConfigError("max_bins must lie in [2,65535]");
  }
};

// ---------------------------------------------------------------------------
// Logistic loss derivatives
// ---------------------------------------------------------------------------

struct GradHess {
  double g = 0.0;
  double h = 0.0;
};

inline double sigmoid(double x) {
  if (x >= 0.0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

/// First and second derivative of the logistic loss at the current raw
/// score: g = p - y, h = p(1-p), with h floored at 1e-16 to keep leaf
/// denominators positive.
inline GradHess logistic_grad_hess(int label, double raw_score) {
  double p = sigmoid(raw_score);
  double h = p * (1.0 - p);
  return {p - static_cast<double>(label), h < 1e-16 ? 1e-16 : h};
}

// ---------------------------------------------------------------------------
// Histogram binning
// ---------------------------------------------------------------------------

using BinEdges = std::vector<std::vector<double>>;

/// Population-quantile bin edges per feature: at most max_bins-1 strictly
/// increasing thresholds, each the midpoint of two adjacent sorted values.
/// Features with few distinct values get exact separators.
inline BinEdges build_bins(const Matrix& features, int max_bins) {
  if (max_bins < 2) throw ConfigError("max_bins must be >= 2");
  BinEdges edges(features.cols);
  for (std::size_t f = 0; f < features.cols; ++f) {
    std::vector<double> sorted(features.rows);
    for (std::size_t r = 0; r < features.rows; ++r)
      sorted[r] = features.at(r, f);
    std::sort(sorted.begin(), sorted.end());

    std::vector<double> distinct = sorted;
    distinct.erase(std::unique(distinct.begin(), distinct.end()),
                   distinct.end());

    std::vector<double>& out = edges[f];
    if (distinct.size() <= 1) continue;
    if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
      for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
        out.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0);
      continue;
    }
    std::size_t n = sorted.size();
    for (int k = 1; k < max_bins; ++k) {
      std::size_t pos = static_cast<std::size_t>(k) * n /
                        static_cast<std::size_t>(max_bins);
      if (pos == 0 || pos >= n) continue;
      double lo = sorted[pos - 1], hi = sorted[pos];
      if (lo == hi) continue;
      double edge = lo + (hi - lo) / 2.0;
      if (out.empty() || edge > out.back()) out.push_back(edge);
    }
  }
  return edges;
}

/// Bin index of a value: the first edge >= value, else the last bin.
/// Out-of-range values land in the extreme bins.
inline int bin_of(const std::vector<double>& edges, double value) {
  auto it = std::lower_bound(edges.begin(), edges.end(), value);
  return static_cast<int>(it - edges.begin());
}

/// Column-major bin codes for a whole feature matrix.
struct BinnedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint16_t> codes;
  std::vector<int> n_bins;

  std::uint16_t code(std::size_t row, std::size_t feature) const {
    return codes[feature * rows + row];
  }
};

inline BinnedMatrix bin_features(const Matrix& features,
                                 const BinEdges& edges) {
  BinnedMatrix b;
  b.rows = features.rows;
  b.cols = features.cols;
  b.codes.resize(features.rows * features.cols);
  b.n_bins.resize(features.cols);
  for (std::size_t f = 0; f < features.cols; ++f) {
    b.n_bins[f] = static_cast<int>(edges[f].size()) + 1;
    for (std::size_t r = 0; r < features.rows; ++r)
      b.codes[f * b.rows + r] =
          static_cast<std::uint16_t>(bin_of(edges[f], features.at(r, f)));
  }
  return b;
}

// ---------------------------------------------------------------------------
// Split search
// ---------------------------------------------------------------------------

struct HistBin {
  double g = 0.0;
  double h = 0.0;
  std::int64_t count = 0;
};

using FeatureHistogram = std::vector<HistBin>;

/// Accumulates (sum g, sum h, count) per bin over `rows`, which must be in
/// ascending row order so the floating sums are reproducible.
inline FeatureHistogram build_histogram(const BinnedMatrix& binned,
                                        std::size_t feature,
                                        const std::uint32_t* rows,
                                        std::size_t n_rows,
                                        const std::vector<GradHess>& gh) {
  FeatureHistogram hist(static_cast<std::size_t>(binned.n_bins[feature]));
  const std::uint16_t* codes = binned.codes.data() + feature * binned.rows;
  for (std::size_t i = 0; i < n_rows; ++i) {
    std::uint32_t r = rows[i];
    HistBin& b = hist[codes[r]];
    b.g += gh[r].g;
    b.h += gh[r].h;
    b.count += 1;
  }
  return hist;
}

struct NodeTotals {
  double g = 0.0;
  double h = 0.0;
  std::int64_t count = 0;
};

struct SplitDecision {
  int feature = -1;
  int bin = -1;  // left child takes codes <= bin
  double gain = 0.0;
};

/// Best (feature, bin) split of a node by the second-order gain
///   G_L^2/(H_L+l) + G_R^2/(H_R+l) - (G_L+G_R)^2/(H_L+H_R+l) - 2*gamma_leaf,
/// scanning the per-feature histograms. Children below min_data_in_leaf are
/// skipped; ties resolve to the lower feature index, then the lower bin.
/// Empty optional when no split has positive gain.
inline std::optional<SplitDecision> best_split(
    const std::vector<FeatureHistogram>& histograms,
    const std::vector<int>& features, const NodeTotals& totals,
    const GbdtParams& params) {
  const double lambda = params.lambda_l2;
  auto score = [lambda](double g, double h) { return g * g / (h + lambda); };
  const double parent_score = score(totals.g, totals.h);

  std::optional<SplitDecision> best;
  for (std::size_t fi = 0; fi < features.size(); ++fi) {
    const FeatureHistogram& hist = histograms[fi];
    double gl = 0.0, hl = 0.0;
    std::int64_t nl = 0;
    for (std::size_t b = 0; b + 1 < hist.size(); ++b) {
      gl += hist[b].g;
      hl += hist[b].h;
      nl += hist[b].count;
      std::int64_t nr = totals.count - nl;
      if (nl < params.min_data_in_leaf) continue;
      if (nr < params.min_data_in_leaf) break;
      double gr = totals.g - gl;
      double hr = totals.h - hl;
      double gain = score(gl, hl) + score(gr, hr) - parent_score -
                    2.0 * params.gamma_leaf;
      if (gain > 0.0 && (!best || gain > best->gain))
        best = SplitDecision{features[fi], static_cast<int>(b), gain};
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Trees
// ---------------------------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  int bin = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_value = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  int leaf_count() const {
    int n = 0;
    for (const auto& node : nodes) n += node.is_leaf();
    return n;
  }

  // Raw-value routing: value <= threshold goes left. Equivalent to the bin
  // routing used at training time because thresholds are bin edges.
  double value_at(const double* row) const {
    int id = 0;
    while (!nodes[static_cast<std::size_t>(id)].is_leaf()) {
      const TreeNode& n = nodes[static_cast<std::size_t>(id)];
      id = row[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(id)].leaf_value;
  }

  double value_by_bins(const BinnedMatrix& binned, std::size_t row) const {
    int id = 0;
    while (!nodes[static_cast<std::size_t>(id)].is_leaf()) {
      const TreeNode& n = nodes[static_cast<std::size_t>(id)];
      id = binned.code(row, static_cast<std::size_t>(n.feature)) <= n.bin
               ? n.left
               : n.right;
    }
    return nodes[static_cast<std::size_t>(id)].leaf_value;
  }
};

namespace detail {

struct LeafState {
  int node_id = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  int depth = 0;
  NodeTotals totals;
  std::optional<SplitDecision> split;
};

}  // namespace detail

/// Leaf-wise growth: repeatedly split the live leaf with the highest gain
/// until num_leaves is reached, max_depth blocks further splits, or no leaf
/// has a positive-gain split. Leaf values are -G/(H+lambda), the exact
/// per-leaf minimizer of the second-order objective.
inline Tree grow_tree(const BinnedMatrix& binned, const BinEdges& edges,
                      const std::vector<std::uint32_t>& rows,
                      const std::vector<GradHess>& gh,
                      const std::vector<int>& features,
                      const GbdtParams& params) {
  if (rows.empty()) throw InternalError("grow_tree on empty sample set");

  Tree tree;
  tree.nodes.emplace_back();

  std::vector<std::uint32_t> order = rows;
  std::vector<std::uint32_t> scratch(order.size());

  auto accumulate = [&gh](const std::uint32_t* p, std::size_t n) {
    NodeTotals t;
    for (std::size_t i = 0; i < n; ++i) {
      t.g += gh[p[i]].g;
      t.h += gh[p[i]].h;
    }
    t.count = static_cast<std::int64_t>(n);
    return t;
  };

  auto evaluate = [&](detail::LeafState& leaf) {
    leaf.split.reset();
    if (leaf.depth >= params.max_depth) return;
    if (leaf.totals.count < 2 * static_cast<std::int64_t>(params.min_data_in_leaf))
      return;
    std::vector<FeatureHistogram> hists(features.size());
    for (std::size_t fi = 0; fi < features.size(); ++fi)
      hists[fi] = build_histogram(binned,
                                  static_cast<std::size_t>(features[fi]),
                                  order.data() + leaf.begin,
                                  leaf.end - leaf.begin, gh);
    leaf.split = best_split(hists, features, leaf.totals, params);
  };

  std::vector<detail::LeafState> leaves;
  detail::LeafState root;
  root.node_id = 0;
  root.begin = 0;
  root.end = order.size();
  root.depth = 0;
  root.totals = accumulate(order.data(), order.size());
  evaluate(root);
  leaves.push_back(std::move(root));

  while (static_cast<int>(leaves.size()) < params.num_leaves) {
    // Highest gain; earlier node on ties.
    int pick = -1;
    for (std::size_t i = 0; i < leaves.size(); ++i)
      if (leaves[i].split &&
          (pick < 0 || leaves[i].split->gain >
                           leaves[static_cast<std::size_t>(pick)].split->gain))
        pick = static_cast<int>(i);
    if (pick < 0) break;

    detail::LeafState leaf = leaves[static_cast<std::size_t>(pick)];
    const SplitDecision& sd = *leaf.split;

    // Stable partition keeps each child span in ascending row order.
    const std::uint16_t* codes =
        binned.codes.data() + static_cast<std::size_t>(sd.feature) * binned.rows;
    std::size_t w = 0;
    for (std::size_t i = leaf.begin; i < leaf.end; ++i)
      if (codes[order[i]] <= sd.bin) scratch[w++] = order[i];
    std::size_t mid = leaf.begin + w;
    for (std::size_t i = leaf.begin; i < leaf.end; ++i)
      if (codes[order[i]] > sd.bin) scratch[w++] = order[i];
    std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(w),
              order.begin() + static_cast<std::ptrdiff_t>(leaf.begin));

    int left_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    int right_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    TreeNode& parent = tree.nodes[static_cast<std::size_t>(leaf.node_id)];
    parent.feature = sd.feature;
    parent.bin = sd.bin;
    parent.threshold =
        edges[static_cast<std::size_t>(sd.feature)][static_cast<std::size_t>(sd.bin)];
    parent.left = left_id;
    parent.right = right_id;

    detail::LeafState left, right;
    left.node_id = left_id;
    left.begin = leaf.begin;
    left.end = mid;
    left.depth = leaf.depth + 1;
    left.totals = accumulate(order.data() + left.begin, left.end - left.begin);
    right.node_id = right_id;
    right.begin = mid;
    right.end = leaf.end;
    right.depth = leaf.depth + 1;
    right.totals =
        accumulate(order.data() + right.begin, right.end - right.begin);
    evaluate(left);
    evaluate(right);

    leaves[static_cast<std::size_t>(pick)] = std::move(left);
    leaves.push_back(std::move(right));
  }

  for (const auto& leaf : leaves) {
    TreeNode& node = tree.nodes[static_cast<std::size_t>(leaf.node_id)];
    node.leaf_value = -leaf.totals.g / (leaf.totals.h + params.lambda_l2);
  }
  return tree;
}

// ---------------------------------------------------------------------------
// Boosted model
// ---------------------------------------------------------------------------

/// An ordered tree ensemble over binned features. Immutable once trained;
/// predictions are sigmoid(base_score + learning_rate * sum of leaf values).
struct GbdtModel {
  std::vector<Tree> trees;
  double base_score = 0.0;
  BinEdges bin_edges;
  GbdtParams params;

  std::size_t n_features() const { return bin_edges.size(); }

  double predict_raw(const double* row, std::size_t arity) const {
    if (arity != bin_edges.size())
      throw DataError("feature vector has arity " + std::to_string(arity) +
                      ", model expects " + std::to_string(bin_edges.size()));
    double raw = base_score;
    for (const Tree& t : trees) raw += params.learning_rate * t.value_at(row);
    return raw;
  }

  double predict_proba(const double* row, std::size_t arity) const {
    return sigmoid(predict_raw(row, arity));
  }
};

/// Boosting loop for one binary task. Per round: a seeded bagging_fraction
/// row subsample and feature_fraction feature subsample, gradients at the
/// current scores, one leaf-wise tree, shrinkage by learning_rate. Scores of
/// all rows advance each round. Deterministic for a fixed seed.
inline GbdtModel train_binary(const EncodedDataset& train,
                              const GbdtParams& params) {
  params.validate();
  const std::size_t n = train.size();
  if (n == 0) throw DataError("empty training set");

  std::int64_t pos = 0, neg = 0;
  for (int label : train.labels) {
    if (label == 1)
      ++pos;
    else if (label == 0)
      ++neg;
    else
      throw DataError("binary training labels must be 0 or 1");
  }
  if (pos == 0 || neg == 0)
    throw DataError("training data contains a single class");

  GbdtModel model;
  model.params = params;
  model.base_score = std::log(static_cast<double>(pos) /
                              static_cast<double>(neg));
  model.bin_edges = build_bins(train.features, params.max_bins);
  BinnedMatrix binned = bin_features(train.features, model.bin_edges);

  std::vector<double> scores(n, model.base_score);
  std::vector<GradHess> gh(n);

  const auto n_bag = static_cast<std::size_t>(std::max<long long>(
      1, std::llround(static_cast<double>(n) * params.bagging_fraction)));
  const auto n_feat = static_cast<std::size_t>(std::clamp<long long>(
      std::llround(static_cast<double>(train.features.cols) *
                   params.feature_fraction),
      1, static_cast<long long>(train.features.cols)));

  model.trees.reserve(static_cast<std::size_t>(params.n_estimators));
  for (int k = 0; k < params.n_estimators; ++k) {
    std::vector<std::uint32_t> rows;
    rows.reserve(n_bag);
    if (n_bag == n) {
      for (std::size_t i = 0; i < n; ++i)
        rows.push_back(static_cast<std::uint32_t>(i));
    } else {
      RngStream bag_rng(params.seed, 0x626167ULL,
                        static_cast<std::uint64_t>(k));
      for (std::size_t i : sample_indices(n, n_bag, bag_rng))
        rows.push_back(static_cast<std::uint32_t>(i));
    }

    std::vector<int> feats;
    feats.reserve(n_feat);
    if (n_feat == train.features.cols) {
      for (std::size_t f = 0; f < train.features.cols; ++f)
        feats.push_back(static_cast<int>(f));
    } else {
      RngStream feat_rng(params.seed, 0x666561ULL,
                         static_cast<std::uint64_t>(k));
      for (std::size_t f :
           sample_indices(train.features.cols, n_feat, feat_rng))
        feats.push_back(static_cast<int>(f));
    }

    for (std::uint32_t r : rows)
      gh[r] = logistic_grad_hess(train.labels[r], scores[r]);

    Tree tree = grow_tree(binned, model.bin_edges, rows, gh, feats, params);
    for (std::size_t r = 0; r < n; ++r)
      scores[r] += params.learning_rate * tree.value_by_bins(binned, r);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

namespace detail {

inline std::string require_prefixed(const std::string& line,
                                    const std::string& prefix,
                                    const std::string& origin, int lineno) {
  if (line.rfind(prefix, 0) != 0)
    throw DataError(origin + ":" + std::to_string(lineno) + ": expected '" +
                    prefix + "...'");
  return line.substr(prefix.size());
}

}  // namespace detail

inline void save_model(const GbdtModel& model, std::ostream& out) {
  const GbdtParams& p = model.params;
  out << "format=vulnboost-gbdt/1\n";
  out << "base_score=" << format_real(model.base_score) << '\n';
  out << "n_features=" << model.bin_edges.size() << '\n';
  out << "n_trees=" << model.trees.size() << '\n';
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
  for (std::size_t f = 0; f < model.bin_edges.size(); ++f) {
    out << "bins=" << f;
    for (double e : model.bin_edges[f]) out << ' ' << format_real(e);
    out << '\n';
  }
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    const Tree& tree = model.trees[t];
    out << "tree " << t << " nodes=" << tree.nodes.size() << '\n';
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const TreeNode& n = tree.nodes[i];
      if (n.is_leaf())
        out << "leaf " << i << ' ' << format_real(n.leaf_value) << '\n';
      else
        out << "node " << i << " split " << n.feature << ' '
            << format_real(n.threshold) << ' ' << n.left << ' ' << n.right
            << '\n';
    }
  }
}

inline void save_model(const GbdtModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file '" + path + "'");
  save_model(model, out);
}

inline GbdtModel load_model(std::istream& in, const std::string& origin) {
  GbdtModel model;
  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line))
      throw DataError(origin + ": truncated model file at line " +
                      std::to_string(lineno + 1));
    ++lineno;
    return line;
  };

  if (trim(next_line()) != "format=vulnboost-gbdt/1")
    throw DataError(origin + ":1: not a vulnboost-gbdt/1 model file");
  model.base_score = parse_real(
      detail::require_prefixed(trim(next_line()), "base_score=", origin, lineno),
      origin);
  long n_features = parse_int(
      detail::require_prefixed(trim(next_line()), "n_features=", origin, lineno),
      origin);
  long n_trees = parse_int(
      detail::require_prefixed(trim(next_line()), "n_trees=", origin, lineno),
      origin);
  if (n_features < 1 || n_trees < 0)
    throw DataError(origin + ": implausible header counts");

  GbdtParams& p = model.params;
  auto param_line = [&](const char* name) {
    return detail::require_prefixed(trim(next_line()),
                                    std::string("param.") + name + "=", origin,
                                    lineno);
  };
  p.learning_rate = parse_real(param_line("learning_rate"), origin);
  p.n_estimators = static_cast<int>(parse_int(param_line("n_estimators"), origin));
  p.max_depth = static_cast<int>(parse_int(param_line("max_depth"), origin));
  p.num_leaves = static_cast<int>(parse_int(param_line("num_leaves"), origin));
  p.feature_fraction = parse_real(param_line("feature_fraction"), origin);
  p.bagging_fraction = parse_real(param_line("bagging_fraction"), origin);
  p.lambda_l2 = parse_real(param_line("lambda_l2"), origin);
  p.gamma_leaf = parse_real(param_line("gamma_leaf"), origin);
  p.min_data_in_leaf =
      static_cast<int>(parse_int(param_line("min_data_in_leaf"), origin));
  p.max_bins = static_cast<int>(parse_int(param_line("max_bins"), origin));
  p.seed = static_cast<std::uint64_t>(parse_int(param_line("seed"), origin));

  model.bin_edges.resize(static_cast<std::size_t>(n_features));
  for (long f = 0; f < n_features; ++f) {
    auto body = detail::require_prefixed(trim(next_line()), "bins=", origin,
                                         lineno);
    auto parts = split(body, ' ');
    if (parts.empty() || parse_int(parts[0], origin) != f)
      throw DataError(origin + ":" + std::to_string(lineno) +
                      ": bins line out of order");
    auto& edges = model.bin_edges[static_cast<std::size_t>(f)];
    for (std::size_t i = 1; i < parts.size(); ++i)
      if (!parts[i].empty()) edges.push_back(parse_real(parts[i], origin));
    for (std::size_t i = 1; i < edges.size(); ++i)
      if (!(edges[i] > edges[i - 1]))
        throw DataError(origin + ":" + std::to_string(lineno) +
                        ": bin edges not strictly increasing");
  }

  model.trees.resize(static_cast<std::size_t>(n_trees));
  for (long t = 0; t < n_trees; ++t) {
    auto header = split(trim(next_line()), ' ');
    if (header.size() != 3 || header[0] != "tree" ||
        parse_int(header[1], origin) != t ||
        header[2].rfind("nodes=", 0) != 0)
      throw DataError(origin + ":" + std::to_string(lineno) +
                      ": expected 'tree " + std::to_string(t) + " nodes=N'");
    long n_nodes = parse_int(header[2].substr(6), origin);
    if (n_nodes < 1)
      throw DataError(origin + ":" + std::to_string(lineno) +
                      ": tree must have at least one node");
    Tree& tree = model.trees[static_cast<std::size_t>(t)];
    tree.nodes.resize(static_cast<std::size_t>(n_nodes));
    for (long i = 0; i < n_nodes; ++i) {
      auto parts = split(trim(next_line()), ' ');
      if (parts.size() == 3 && parts[0] == "leaf") {
        long id = parse_int(parts[1], origin);
        if (id != i)
          throw DataError(origin + ":" + std::to_string(lineno) +
                          ": node ids must be sequential");
        tree.nodes[static_cast<std::size_t>(i)].leaf_value =
            parse_real(parts[2], origin);
      } else if (parts.size() == 7 && parts[0] == "node" &&
                 parts[2] == "split") {
        long id = parse_int(parts[1], origin);
        if (id != i)
          throw DataError(origin + ":" + std::to_string(lineno) +
                          ": node ids must be sequential");
        TreeNode& node = tree.nodes[static_cast<std::size_t>(i)];
        node.feature = static_cast<int>(parse_int(parts[3], origin));
        node.threshold = parse_real(parts[4], origin);
        node.left = static_cast<int>(parse_int(parts[5], origin));
        node.right = static_cast<int>(parse_int(parts[6], origin));
        if (node.feature < 0 || node.feature >= n_features ||
            node.left <= i || node.right <= i || node.left >= n_nodes ||
            node.right >= n_nodes)
          throw DataError(origin + ":" + std::to_string(lineno) +
                          ": malformed split node");
        const auto& edges = model.bin_edges[static_cast<std::size_t>(node.feature)];
        node.bin = bin_of(edges, node.threshold);
      } else {
        throw DataError(origin + ":" + std::to_string(lineno) +
                        ": expected 'node ...' or 'leaf ...'");
      }
    }
  }
  return model;
}

inline GbdtModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  return load_model(in, path);
}

}  // namespace vulnboost
