#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "machash/codes.hpp"
#include "machash/dataset.hpp"

namespace machash {

/// Per query, the sorted base indices of its true neighbours.
struct GroundTruth {
  std::vector<std::vector<std::uint32_t>> neighbors;
};

enum class TruthMode { same_label, knn };

/// same_label: base points sharing the query's label. knn: the exact K
/// nearest base points under `metric` (ties by index). `self_index[q]`,
/// when given and >= 0, is the base index of query q and is left out of its
/// own truth set only if `exclude_self`.
GroundTruth build_ground_truth(const Dataset& base, const Dataset& queries, TruthMode mode,
                               std::size_t k, Metric metric = Metric::euclidean,
                               std::span<const std::int64_t> self_index = {},
                               bool exclude_self = false);

/// k base indices by ascending Hamming distance, ties by ascending index.
/// `exclude` (>= 0) removes one base index from consideration.
std::vector<std::size_t> hamming_knn(const CodeMatrix& base, std::uint64_t query, std::size_t k,
                                     std::int64_t exclude = -1);

/// |retrieved & truth| / |retrieved|; `truth` sorted ascending.
double precision_at_k(std::span<const std::size_t> retrieved, std::span<const std::uint32_t> truth);

/// Mean precision@k over queries.
double mean_precision_at_k(const CodeMatrix& base, const CodeMatrix& queries, const GroundTruth& truth,
                           std::size_t k, std::span<const std::int64_t> self_index = {});

struct PrPoint {
  int radius = 0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t excluded = 0;  // queries with empty truth, left out of the recall mean
};

/// Retrieved set = base points within Hamming distance r. A query that
/// retrieves nothing contributes precision 0.
PrPoint pr_at_radius(const CodeMatrix& base, const CodeMatrix& queries, const GroundTruth& truth, int r,
                     std::span<const std::int64_t> self_index = {});

/// r = 0..b.
std::vector<PrPoint> pr_curve(const CodeMatrix& base, const CodeMatrix& queries, const GroundTruth& truth,
                              std::span<const std::int64_t> self_index = {});

/// Shannon entropy (bits) of the empirical distribution of the columns.
double effective_bits(const CodeMatrix& codes);

struct RetrievalReport {
  int bits = 0;
  std::vector<std::size_t> k_grid;
  std::vector<double> precision_at_k;
  std::vector<PrPoint> pr;
  double effective_bits_train = 0.0;
  double effective_bits_test = 0.0;
};

inline const std::vector<std::size_t> kDefaultKGrid{1, 5, 10, 50, 100, 500};

/// Entries of `k_grid` larger than the base are dropped.
RetrievalReport evaluate_retrieval(const CodeMatrix& base, const CodeMatrix& queries, const GroundTruth& truth,
                                   std::span<const std::size_t> k_grid,
                                   std::span<const std::int64_t> self_index = {});

std::string report_to_json(const RetrievalReport& r);
RetrievalReport report_from_json(const std::string& text);
/// One row per (metric, parameter): metric,param,value.
std::string report_to_csv(const RetrievalReport& r);

}  // namespace machash
