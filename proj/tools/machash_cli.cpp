// machash: command-line driver for learning binary hash functions.
//
//   machash gen       synthetic labeled Gaussian clusters
//   machash affinity  similar/dissimilar pair lists
//   machash train     config-driven experiment (two-step and/or MAC arms)
//   machash eval      retrieval metrics of a saved model
//   machash compare   deltas between two arm directories

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "machash/affinity.hpp"
#include "machash/experiment.hpp"
#include "machash/hstep.hpp"
#include "machash/retrieval.hpp"

using namespace machash;

namespace {

DataFormat format_of(const std::string& s) {
  if (s == "csv") return DataFormat::csv;
  if (s == "dense-binary") return DataFormat::dense_binary;
  throw std::invalid_argument("unknown format '" + s + "'");
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary hash learning with the method of auxiliary coordinates"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a labeled synthetic dataset");
  SyntheticSpec syn;
  std::string gen_out, gen_format = "csv";
  gen->add_option("--classes", syn.classes, "Number of classes")->capture_default_str();
  gen->add_option("--points", syn.points_per_class, "Points per class")->capture_default_str();
  gen->add_option("--dim", syn.dim, "Feature dimension")->capture_default_str();
  gen->add_option("--separation", syn.separation, "Minimum distance between class centers")->capture_default_str();
  gen->add_option("--noise", syn.noise, "Per-coordinate standard deviation")->capture_default_str();
  gen->add_option("--seed", syn.seed, "Random seed")->capture_default_str();
  gen->add_option("--format", gen_format, "csv or dense-binary (dense-binary drops labels)")->capture_default_str();
  gen->add_option("-o,--out", gen_out, "Output file")->required();

  // affinity
  auto* aff = app.add_subcommand("affinity", "Build an affinity pair list");
  std::string aff_data, aff_format = "csv", aff_mode = "supervised", aff_metric = "euclidean", aff_out;
  bool aff_labels = true;
  std::size_t positives = 100, negatives = 500;
  std::uint64_t aff_seed = 1;
  aff->add_option("--data", aff_data, "Dataset file")->required()->check(CLI::ExistingFile);
  aff->add_option("--format", aff_format, "csv or dense-binary")->capture_default_str();
  aff->add_option("--label-column", aff_labels, "Last CSV column holds labels")->capture_default_str();
  aff->add_option("--mode", aff_mode, "supervised or pseudolabel")->capture_default_str();
  aff->add_option("--positives", positives, "Similar neighbours per point")->capture_default_str();
  aff->add_option("--negatives", negatives, "Dissimilar points per point")->capture_default_str();
  aff->add_option("--metric", aff_metric, "euclidean or cosine (pseudolabel mode)")->capture_default_str();
  aff->add_option("--seed", aff_seed, "Random seed")->capture_default_str();
  aff->add_option("-o,--out", aff_out, "Output CSV (n,m,y,y_neg)")->required();

  // train
  auto* train = app.add_subcommand("train", "Run a configured experiment");
  std::string cfg_path, arm_override, out_override;
  train->add_option("config", cfg_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--arm", arm_override, "both, mac or two-step (overrides the config)");
  train->add_option("-o,--out", out_override, "Output directory (overrides the config)");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a saved model");
  std::string ev_model, ev_base, ev_queries, ev_format = "csv", ev_out, ev_truth = "same-label";
  std::size_t ev_k = 100;
  std::vector<std::size_t> ev_grid = kDefaultKGrid;
  ev->add_option("--model", ev_model, "model.json")->required()->check(CLI::ExistingFile);
  ev->add_option("--base", ev_base, "Base (database) dataset")->required()->check(CLI::ExistingFile);
  ev->add_option("--queries", ev_queries, "Query dataset")->required()->check(CLI::ExistingFile);
  ev->add_option("--format", ev_format, "csv or dense-binary")->capture_default_str();
  ev->add_option("--ground-truth", ev_truth, "same-label or knn")->capture_default_str();
  ev->add_option("--K", ev_k, "Neighbours per query for knn ground truth")->capture_default_str();
  ev->add_option("--k-grid", ev_grid, "Values of k for precision@k")->capture_default_str();
  ev->add_option("-o,--out", ev_out, "Report JSON (stdout if omitted)");

  // compare
  auto* cmp = app.add_subcommand("compare", "Compare two arm output directories");
  std::string cmp_a, cmp_b, cmp_out;
  cmp->add_option("a", cmp_a, "Baseline arm directory")->required();
  cmp->add_option("b", cmp_b, "Candidate arm directory")->required();
  cmp->add_option("-o,--out", cmp_out, "Summary JSON (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const Dataset d = gen_synthetic(syn);
      if (format_of(gen_format) == DataFormat::csv)
        save_csv(d, gen_out);
      else
        save_dense_binary(d, gen_out);
      std::cerr << "wrote " << d.size() << " x " << d.dim() << " to " << gen_out << '\n';
    } else if (*aff) {
      const Dataset d = load_dataset(aff_data, format_of(aff_format), aff_labels);
      AffinityGraph g;
      if (aff_mode == "supervised")
        g = build_supervised_affinities(d, positives, negatives, aff_seed);
      else if (aff_mode == "pseudolabel")
        g = build_pseudolabel_affinities(d, positives, negatives,
                                         aff_metric == "cosine" ? Metric::cosine : Metric::euclidean, aff_seed);
      else
        throw std::invalid_argument("unknown affinity mode '" + aff_mode + "'");
      save_affinities(g, aff_out);
      std::cerr << "wrote " << g.pairs.size() << " pairs to " << aff_out << '\n';
    } else if (*train) {
      nlohmann::json j = nlohmann::json::parse(std::ifstream(cfg_path));
      if (!arm_override.empty()) j["arm"] = arm_override;
      if (!out_override.empty()) j["output"] = out_override;
      const auto cfg = parse_config(j);
      const auto outcome = run_experiment(cfg);
      for (const auto& arm : outcome.arms) {
        std::cout << arm.name << ": L = " << arm.trace.back().loss;
        for (std::size_t i = 0; i < arm.report.k_grid.size(); ++i)
          std::cout << "  P@" << arm.report.k_grid[i] << " = " << arm.report.precision_at_k[i];
        std::cout << '\n';
      }
      std::cout << "artifacts in " << cfg.output.string() << '\n';
    } else if (*ev) {
      const HashModel h = load_model(ev_model);
      const Dataset base = load_dataset(ev_base, format_of(ev_format), ev_truth == "same-label");
      const Dataset queries = load_dataset(ev_queries, format_of(ev_format), ev_truth == "same-label");
      const auto truth = build_ground_truth(base, queries, ev_truth == "knn" ? TruthMode::knn : TruthMode::same_label, ev_k);
      const auto report = evaluate_retrieval(hash_apply(h, base.features), hash_apply(h, queries.features), truth, ev_grid);
      write_or_print(ev_out, report_to_json(report) + "\n");
    } else if (*cmp) {
      write_or_print(cmp_out, compare_arms(cmp_a, cmp_b).dump(1) + "\n");
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
