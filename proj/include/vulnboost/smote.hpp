#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "vulnboost/dataset.hpp"

namespace vulnboost {

struct SmoteConfig {
  int k_neighbors = 5;
  // Only balancing target implemented: raise every class to the majority
  // count.
  std::uint64_t seed = 0;

  void validate() const {
    if (k_neighbors < 1) throw ConfigError("smote k_neighbors must be >= 1");
  }
};

/// Where a synthetic row came from: it must equal
/// base + gap * (neighbor - base), with base and neighbor original rows of
/// the same class.
struct SyntheticProvenance {
  std::size_t base_index = 0;
  std::size_t neighbor_index = 0;
  double gap = 0.0;
};

inline std::array<std::size_t, 11> class_distribution(
    const EncodedDataset& ds) {
  std::array<std::size_t, 11> counts{};
  for (int label : ds.labels) {
    if (label < 0 || label >= kNumGrades)
      throw DataError("label outside 0..10");
    counts[static_cast<std::size_t>(label)] += 1;
  }
  return counts;
}

/// The k rows of `mask` closest to the query row in Euclidean distance,
/// nearest first; ties break toward the lower row index. Returns all of
/// `mask` when it has fewer than k rows.
inline std::vector<std::size_t> k_nearest_neighbors(
    const Matrix& points, std::size_t query_index, int k,
    const std::vector<std::size_t>& mask) {
  if (mask.empty()) throw DataError("k_nearest_neighbors: empty mask");
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(mask.size());
  const double* q = points.row(query_index);
  for (std::size_t idx : mask) {
    if (idx == query_index)
      throw InternalError("mask must exclude the query row");
    const double* p = points.row(idx);
    double d2 = 0.0;
    for (std::size_t c = 0; c < points.cols; ++c) {
      double diff = p[c] - q[c];
      d2 += diff * diff;
    }
    dist.emplace_back(d2, idx);
  }
  std::sort(dist.begin(), dist.end());
  std::size_t take = std::min(dist.size(), static_cast<std::size_t>(k));
  std::vector<std::size_t> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(dist[i].second);
  return out;
}

/// Plain SMOTE: every class present is raised to the pre-call majority count
/// by sampling points on segments between a minority row and one of its k
/// same-class nearest neighbors. Original rows stay first and untouched;
/// synthetic rows follow, grouped by class. Classes smaller than k+1 fall
/// back to k' = count-1 neighbors; singleton classes duplicate their row
/// (gap 0). Random draws come from a counter stream keyed by
/// (class, base row, synthetic ordinal), so the output is independent of any
/// parallel schedule.
inline std::pair<EncodedDataset, std::vector<SyntheticProvenance>>
smote_oversample(const EncodedDataset& ds, const SmoteConfig& cfg) {
  cfg.validate();
  auto counts = class_distribution(ds);
  std::size_t max_count = 0;
  for (std::size_t c : counts) max_count = std::max(max_count, c);

  std::size_t deficit_total = 0;
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] > 0) deficit_total += max_count - counts[c];

  EncodedDataset out;
  out.schema = ds.schema;
  out.encoder = ds.encoder;
  out.labels = ds.labels;
  out.features = Matrix(ds.size() + deficit_total, ds.features.cols);
  std::copy(ds.features.data.begin(), ds.features.data.end(),
            out.features.data.begin());
  out.labels.reserve(ds.size() + deficit_total);

  std::vector<SyntheticProvenance> provenance;
  provenance.reserve(deficit_total);

  // Per-class row index lists, ascending.
  std::array<std::vector<std::size_t>, 11> rows_of;
  for (std::size_t r = 0; r < ds.size(); ++r)
    rows_of[static_cast<std::size_t>(ds.labels[r])].push_back(r);

  std::size_t write = ds.size();
  for (std::size_t cls = 0; cls < rows_of.size(); ++cls) {
    const auto& rows = rows_of[cls];
    if (rows.empty() || rows.size() >= max_count) continue;
    std::size_t need = max_count - rows.size();

    // Neighbor lists once per base row; k' shrinks for tiny classes.
    int k_eff = std::min<int>(cfg.k_neighbors,
                              static_cast<int>(rows.size()) - 1);
    std::vector<std::vector<std::size_t>> neighbors(rows.size());
    if (k_eff >= 1) {
      parallel_for(rows.size(), [&](std::size_t b) {
        std::vector<std::size_t> mask;
        mask.reserve(rows.size() - 1);
        for (std::size_t other : rows)
          if (other != rows[b]) mask.push_back(other);
        neighbors[b] =
            k_nearest_neighbors(ds.features, rows[b], k_eff, mask);
      });
    }

    for (std::size_t s = 0; s < need; ++s) {
      std::size_t b = s % rows.size();
      std::size_t base = rows[b];
      RngStream rng(cfg.seed, cls, base, s);
      std::size_t neighbor = base;
      double gap = 0.0;
      if (k_eff >= 1) {
        neighbor = neighbors[b][rng.next_index(neighbors[b].size())];
        gap = rng.next_unit();
      }
      const double* bp = ds.features.row(base);
      const double* np = ds.features.row(neighbor);
      double* sp = out.features.row(write);
      for (std::size_t c = 0; c < ds.features.cols; ++c)
        sp[c] = bp[c] + gap * (np[c] - bp[c]);
      out.labels.push_back(static_cast<int>(cls));
      provenance.push_back({base, neighbor, gap});
      ++write;
    }
  }
  return {std::move(out), std::move(provenance)};
}

}  // namespace vulnboost
