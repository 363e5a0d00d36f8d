#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace machash {

/// Row-major so a point's features are contiguous.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Dataset {
  FeatureMatrix features;  // N x D, one point per row
  std::optional<std::vector<int>> labels;
  std::vector<std::int64_t> ids;

  std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }

  /// Rows `indices`, in that order, carrying labels and ids along.
  Dataset subset(std::span<const std::size_t> indices) const;
};

/// Throws std::invalid_argument when N or D is zero, labels have the wrong
/// length, or any feature is non-finite.
void validate(const Dataset& d);

/// Dataset with ids 0..N-1.
Dataset make_dataset(FeatureMatrix features, std::optional<std::vector<int>> labels = {});

enum class DataFormat { dense_binary, csv };

/// Dense-binary: "BHD1", u32 N, u32 D, u8 dtype (0 = f32, 1 = f64), then
/// N*D little-endian values row-major. CSV: optional header row, one point
/// per row; with `label_column` the last column is an integer class id.
Dataset load_dataset(const std::filesystem::path& path, DataFormat format,
                     bool label_column = false);

void save_csv(const Dataset& d, const std::filesystem::path& path);
void save_dense_binary(const Dataset& d, const std::filesystem::path& path, bool single_precision = false);

enum class Metric { euclidean, cosine };

/// Centers the rows and scales each to unit norm (zero rows stay zero).
FeatureMatrix center_and_normalize(const FeatureMatrix& x);

/// Exact k nearest rows of `base` to `query` by squared Euclidean distance,
/// ties broken by smaller index. `exclude` (if set) is skipped.
std::vector<std::size_t> nearest_neighbors(const FeatureMatrix& base,
                                           const Eigen::Ref<const Eigen::RowVectorXd>& query,
                                           std::size_t k,
                                           std::optional<std::size_t> exclude = {});

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Seeded random partition of 0..N-1 into disjoint train/validation/test.
Split make_split(std::size_t points, std::size_t train, std::size_t validation,
                 std::size_t test, std::uint64_t seed);

/// Disjointness of train and validation, index bounds, and nonempty
/// validation when `require_validation`.
void validate(const Split& split, std::size_t points, bool require_validation);

}  // namespace machash
