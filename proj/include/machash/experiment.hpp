#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "machash/dataset.hpp"
#include "machash/loss.hpp"
#include "machash/mac.hpp"
#include "machash/retrieval.hpp"

namespace machash {

struct SyntheticSpec {
  int classes = 10;
  int points_per_class = 100;
  int dim = 32;
  double separation = 2.0;  // minimum pairwise center distance
  double noise = 1.0;       // per-coordinate standard deviation
  std::uint64_t seed = 1;
};

/// Gaussian clusters around seeded random centers at pairwise distance >=
/// separation; class-major order, labels 0..classes-1.
Dataset gen_synthetic(const SyntheticSpec& spec);

/// Thrown with every problem found in a configuration.
class ConfigError : public std::invalid_argument {
public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

private:
  std::vector<std::string> problems_;
};

enum class Arm { both, mac, two_step };

struct ExperimentConfig {
  std::optional<SyntheticSpec> synthetic;
  std::filesystem::path data_path;
  DataFormat data_format = DataFormat::csv;
  bool label_column = true;

  LossSpec loss;
  bool pseudolabels = false;  // affinities from nearest neighbours instead of labels
  std::size_t positives = 100;
  std::size_t negatives = 500;
  Metric metric = Metric::euclidean;

  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;

  MacConfig mac;
  std::string mu1_mode = "default";  // "default", "estimate" or "value"

  bool rbf = false;
  std::size_t rbf_centers = 500;

  TruthMode truth = TruthMode::same_label;
  std::size_t truth_k = 100;
  std::vector<std::size_t> k_grid = kDefaultKGrid;
  std::size_t validation_k = 50;

  Arm arm = Arm::both;
  std::filesystem::path output = "out";
  std::uint64_t seed = 1;
};

/// Unknown keys, wrong types and out-of-range values are all collected and
/// reported together in one ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical form; parse_config(config_to_json(c)) is equivalent to c.
nlohmann::json config_to_json(const ExperimentConfig& c);

struct ArmOutcome {
  std::string name;
  HashModel model;
  MacTrace trace;
  RetrievalReport report;
};

struct ExperimentOutcome {
  std::vector<ArmOutcome> arms;
  nlohmann::json manifest;
};

/// Runs the whole pipeline and writes, per arm, trace.csv, report.json,
/// report.csv, model.json and manifest.json under cfg.output/<arm>/, plus
/// cfg.output/manifest.json (and comparison.json when both arms ran).
ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

/// Deltas (b minus a) of final loss, precision@k and PR points of two arm
/// directories. Throws when a manifest is missing or the arms did not share
/// data, affinities and initializer.
nlohmann::json compare_arms(const std::filesystem::path& a, const std::filesystem::path& b);
nlohmann::json compare_arms(const MacTrace& ta, const RetrievalReport& ra, const MacTrace& tb,
                            const RetrievalReport& rb);

}  // namespace machash
