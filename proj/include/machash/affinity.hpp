#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "machash/dataset.hpp"

namespace machash {

/// One stored (directed) pair. `y` is the affinity; for the EE loss it is
/// the attractive weight y+ and `y_neg` the repulsive weight y-.
struct AffinityPair {
  std::uint32_t n = 0;
  std::uint32_t m = 0;
  double y = 0.0;
  double y_neg = 0.0;

  friend bool operator==(const AffinityPair&, const AffinityPair&) = default;
};

/// Loss sums run over `pairs` only, each stored pair counted once.
struct AffinityGraph {
  std::size_t points = 0;
  std::vector<AffinityPair> pairs;
  std::vector<std::uint32_t> positives;  // per source point
  std::vector<std::uint32_t> negatives;

  friend bool operator==(const AffinityGraph&, const AffinityGraph&) = default;
};

/// Index bounds, n != m, and no duplicate directed pair.
void validate(const AffinityGraph& g);

/// For each point: up to `positives` same-label partners (y = +1) and up to
/// `negatives` different-label partners (y = -1), uniformly without
/// replacement; the whole pool when it is smaller.
AffinityGraph build_supervised_affinities(const Dataset& d, std::size_t positives,
                                          std::size_t negatives, std::uint64_t seed);

/// Positives are the exact nearest neighbours (self excluded, ties by index);
/// negatives are drawn uniformly from the remaining points. Cosine mode
/// centers and normalizes first.
AffinityGraph build_pseudolabel_affinities(const Dataset& d, std::size_t positives,
                                           std::size_t negatives, Metric metric,
                                           std::uint64_t seed);

/// Maps y = +1 to (y+, y-) = (1, 0) and y = -1 to (0, 1).
AffinityGraph to_ee_affinities(const AffinityGraph& g);

/// Replaces y with half the squared feature distance (times `scale`).
AffinityGraph to_bre_affinities(const AffinityGraph& g, const Dataset& d, double scale = 1.0);

/// Columns n,m,y,y_neg with a header row.
void save_affinities(const AffinityGraph& g, const std::filesystem::path& path);
AffinityGraph load_affinities(const std::filesystem::path& path, std::size_t points);

}  // namespace machash
