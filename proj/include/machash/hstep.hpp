#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "machash/codes.hpp"
#include "machash/dataset.hpp"

namespace machash {

/// Identity, or Gaussian RBF features exp(-|x - c_j|^2 / (2 sigma^2)).
struct FeatureMap {
  enum class Kind { identity, rbf };

  Kind kind = Kind::identity;
  int input_dim = 0;
  FeatureMatrix centers;  // M x D (rbf only)
  double sigma = 1.0;

  int output_dim() const { return kind == Kind::identity ? input_dim : static_cast<int>(centers.rows()); }
  FeatureMatrix apply(const FeatureMatrix& x) const;
};

FeatureMap identity_map(int dim);

/// M centers sampled without replacement; sigma is the mean pairwise
/// Euclidean distance among the first min(300, N) points.
FeatureMap make_rbf_map(const FeatureMatrix& x, std::size_t centers, std::uint64_t seed);

struct ClassifierConfig {
  double C = 10.0;
  int max_epochs = 200;
  double tolerance = 1e-4;
};

struct LinearClassifier {
  Eigen::VectorXd weights;
  double bias = 0.0;
};

/**
 * L2-regularized hinge-loss linear classifier by dual coordinate descent.
 *
 * Minimizes (1/(2C)) (|w|^2 + c^2) + sum_n max(0, 1 - t_n (w'x_n + c)); the
 * bias is handled as the weight of a constant unit feature. Coordinates are
 * visited in a seeded random order each epoch, so results are a function of
 * (features, targets, cfg, seed) only. Stops when the projected-gradient
 * spread over an epoch drops below cfg.tolerance.
 */
LinearClassifier train_bit_classifier(const FeatureMatrix& features, std::span<const int> targets,
                                      const ClassifierConfig& cfg, std::uint64_t seed);

/// The objective train_bit_classifier minimizes.
double hinge_objective(const FeatureMatrix& features, std::span<const int> targets,
                       const LinearClassifier& clf, double C);

struct HashModel {
  FeatureMap map;
  Eigen::MatrixXd weights;  // b x F
  Eigen::VectorXd bias;     // b

  int bits() const { return static_cast<int>(weights.rows()); }
  LinearClassifier classifier(int bit) const;
  void set_classifier(int bit, const LinearClassifier& clf);
};

/// Trains one classifier per bit row of `z`; bit i depends only on
/// (features, row i, cfg, seed).
HashModel fit_hash(const FeatureMatrix& x, const CodeMatrix& z, const ClassifierConfig& cfg,
                   const FeatureMap& map, std::uint64_t seed);

/// Column n = sign(W phi(x_n) + c), sign(0) := +1.
CodeMatrix hash_apply(const HashModel& h, const FeatureMatrix& x);
/// Same, for already-mapped features.
CodeMatrix hash_apply_mapped(const HashModel& h, const FeatureMatrix& phi);

/// JSON record {"format":"machash-model","version":1,...}; doubles are
/// written in shortest round-trip form so predictions survive exactly.
std::string model_to_json(const HashModel& h);
HashModel model_from_json(const std::string& text);
void save_model(const HashModel& h, const std::filesystem::path& path);
HashModel load_model(const std::filesystem::path& path);

}  // namespace machash
