#include "machash/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "machash/affinity.hpp"
#include "machash/util.hpp"

namespace machash {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += "\n  " + s;
  return out;
}

/// Collects every configuration problem instead of stopping at the first.
class Reader {
public:
  std::vector<std::string> errors;

  const json* object(const json& parent, const std::string& key, const std::string& where,
                     const std::set<std::string>& allowed, bool required = false) {
    if (!parent.contains(key)) {
      if (required) errors.push_back(where + key + ": missing");
      return nullptr;
    }
    const json& j = parent.at(key);
    if (!j.is_object()) {
      errors.push_back(where + key + ": expected an object");
      return nullptr;
    }
    check_keys(j, where + key + ".", allowed);
    return &j;
  }

  void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    for (const auto& [k, v] : j.items())
      if (!allowed.count(k)) errors.push_back(where + k + ": unknown key");
  }

  template <typename T>
  void get(const json* j, const std::string& key, const std::string& where, T& out) {
    if (!j || !j->contains(key)) return;
    const json& v = j->at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
        if (std::is_unsigned_v<T> && v.get<long long>() < 0) throw std::invalid_argument("must be >= 0");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
      }
      out = v.get<T>();
    } catch (const std::exception& e) {
      errors.push_back(where + key + ": " + e.what());
    }
  }

  void require(bool ok, const std::string& message) {
    if (!ok) errors.push_back(message);
  }
};

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t digest(const Dataset& d) {
  std::string bytes(reinterpret_cast<const char*>(d.features.data()),
                    static_cast<std::size_t>(d.features.size()) * sizeof(double));
  if (d.labels) bytes.append(reinterpret_cast<const char*>(d.labels->data()), d.labels->size() * sizeof(int));
  return fnv1a(bytes);
}

std::uint64_t digest(const AffinityGraph& g) {
  std::string bytes;
  for (const auto& p : g.pairs) {
    bytes.append(reinterpret_cast<const char*>(&p.n), sizeof p.n);
    bytes.append(reinterpret_cast<const char*>(&p.m), sizeof p.m);
    bytes.append(reinterpret_cast<const char*>(&p.y), sizeof p.y);
    bytes.append(reinterpret_cast<const char*>(&p.y_neg), sizeof p.y_neg);
  }
  return fnv1a(bytes);
}

std::uint64_t digest(const CodeMatrix& z) {
  std::string bytes(reinterpret_cast<const char*>(z.words().data()), z.words().size() * sizeof(std::uint64_t));
  return fnv1a(bytes);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const char* arm_name(Arm a) {
  switch (a) {
    case Arm::both: return "both";
    case Arm::mac: return "mac";
    case Arm::two_step: return "two-step";
  }
  return "?";
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::invalid_argument("invalid configuration:" + join(problems)), problems_(std::move(problems)) {}

Dataset gen_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 1 || spec.points_per_class < 1 || spec.dim < 1)
    throw std::invalid_argument("synthetic spec needs classes, points and dim >= 1");
  if (!(spec.separation > 0)) throw std::invalid_argument("synthetic separation must be > 0");
  if (spec.noise < 0) throw std::invalid_argument("synthetic noise must be >= 0");
  std::mt19937_64 rng(spec.seed);
  // Cube side grows with the class count so a feasible placement exists.
  const double half = spec.separation * std::max(1.0, std::pow(static_cast<double>(spec.classes), 1.0 / spec.dim));
  std::uniform_real_distribution<double> coord(-half, half);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd centers(spec.classes, spec.dim);
  for (int c = 0; c < spec.classes; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      for (int k = 0; k < spec.dim; ++k) centers(c, k) = coord(rng);
      placed = true;
      for (int o = 0; o < c && placed; ++o) placed = (centers.row(c) - centers.row(o)).norm() >= spec.separation;
    }
    if (!placed)
      throw std::invalid_argument("could not place class " + std::to_string(c) + " centers at separation " +
                                  std::to_string(spec.separation) + " after 1000 resamples");
  }
  const auto n = static_cast<Eigen::Index>(spec.classes) * spec.points_per_class;
  FeatureMatrix x(n, spec.dim);
  std::vector<int> labels(static_cast<std::size_t>(n));
  Eigen::Index r = 0;
  for (int c = 0; c < spec.classes; ++c)
    for (int p = 0; p < spec.points_per_class; ++p, ++r) {
      for (int k = 0; k < spec.dim; ++k) x(r, k) = centers(c, k) + spec.noise * gauss(rng);
      labels[static_cast<std::size_t>(r)] = c;
    }
  return make_dataset(std::move(x), std::move(labels));
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  Reader rd;
  if (!j.is_object()) throw ConfigError({"configuration must be a JSON object"});
  rd.check_keys(j, "", {"seed", "output", "arm", "dataset", "split", "loss", "affinity", "hash", "mac", "eval"});
  rd.get(&j, "seed", "", c.seed);
  std::string output = c.output.string();
  rd.get(&j, "output", "", output);
  c.output = output;
  std::string arm = "both";
  rd.get(&j, "arm", "", arm);
  if (arm == "both") c.arm = Arm::both;
  else if (arm == "mac") c.arm = Arm::mac;
  else if (arm == "two-step") c.arm = Arm::two_step;
  else rd.errors.push_back("arm: expected both, mac or two-step");

  if (const json* d = rd.object(j, "dataset", "", {"synthetic", "path", "format", "label_column"}, true)) {
    if (const json* s = rd.object(*d, "synthetic", "dataset.", {"classes", "points_per_class", "dim", "separation", "noise", "seed"})) {
      SyntheticSpec sp;
      sp.seed = subseed(c.seed, "synthetic");
      rd.get(s, "classes", "dataset.synthetic.", sp.classes);
      rd.get(s, "points_per_class", "dataset.synthetic.", sp.points_per_class);
      rd.get(s, "dim", "dataset.synthetic.", sp.dim);
      rd.get(s, "separation", "dataset.synthetic.", sp.separation);
      rd.get(s, "noise", "dataset.synthetic.", sp.noise);
      rd.get(s, "seed", "dataset.synthetic.", sp.seed);
      rd.require(sp.classes >= 1 && sp.points_per_class >= 1 && sp.dim >= 1,
                 "dataset.synthetic: classes, points_per_class and dim must be >= 1");
      rd.require(sp.separation > 0, "dataset.synthetic.separation: must be > 0");
      rd.require(sp.noise >= 0, "dataset.synthetic.noise: must be >= 0");
      c.synthetic = sp;
    }
    std::string path, format = "csv";
    rd.get(d, "path", "dataset.", path);
    rd.get(d, "format", "dataset.", format);
    rd.get(d, "label_column", "dataset.", c.label_column);
    c.data_path = path;
    if (format == "csv") c.data_format = DataFormat::csv;
    else if (format == "dense-binary") c.data_format = DataFormat::dense_binary;
    else rd.errors.push_back("dataset.format: expected csv or dense-binary");
    if (c.synthetic && !path.empty()) rd.errors.push_back("dataset: give either synthetic or path, not both");
    if (!c.synthetic && path.empty()) rd.errors.push_back("dataset: needs synthetic or path");
    if (!path.empty() && !fs::exists(path)) rd.errors.push_back("dataset.path: no such file " + path);
  }

  if (const json* s = rd.object(j, "split", "", {"train", "validation", "test"}, true)) {
    rd.get(s, "train", "split.", c.train);
    rd.get(s, "validation", "split.", c.validation);
    rd.get(s, "test", "split.", c.test);
    rd.require(c.train >= 2, "split.train: needs at least 2 points");
  }

  if (const json* l = rd.object(j, "loss", "", {"kind", "bits", "lambda"})) {
    std::string kind = "ksh";
    rd.get(l, "kind", "loss.", kind);
    try {
      c.loss.kind = parse_loss_kind(kind);
    } catch (const std::exception& e) {
      rd.errors.push_back(std::string("loss.kind: ") + e.what());
    }
    rd.get(l, "bits", "loss.", c.loss.bits);
    rd.get(l, "lambda", "loss.", c.loss.lambda);
  }
  rd.require(c.loss.bits >= 1 && c.loss.bits <= kMaxBits, "loss.bits: must be in [1, 64]");
  rd.require(c.loss.kind != LossKind::ee || c.loss.lambda > 0, "loss.lambda: must be > 0 for ee");

  if (const json* a = rd.object(j, "affinity", "", {"mode", "positives", "negatives", "metric"})) {
    std::string mode = "supervised", metric = "euclidean";
    rd.get(a, "mode", "affinity.", mode);
    rd.get(a, "positives", "affinity.", c.positives);
    rd.get(a, "negatives", "affinity.", c.negatives);
    rd.get(a, "metric", "affinity.", metric);
    if (mode == "pseudolabel") c.pseudolabels = true;
    else if (mode != "supervised") rd.errors.push_back("affinity.mode: expected supervised or pseudolabel");
    if (metric == "cosine") c.metric = Metric::cosine;
    else if (metric != "euclidean") rd.errors.push_back("affinity.metric: expected euclidean or cosine");
  }

  if (const json* h = rd.object(j, "hash", "", {"kind", "centers", "C", "epochs", "tolerance"})) {
    std::string kind = "linear";
    rd.get(h, "kind", "hash.", kind);
    if (kind == "rbf") c.rbf = true;
    else if (kind != "linear") rd.errors.push_back("hash.kind: expected linear or rbf");
    rd.get(h, "centers", "hash.", c.rbf_centers);
    rd.get(h, "C", "hash.", c.mac.classifier.C);
    rd.get(h, "epochs", "hash.", c.mac.classifier.max_epochs);
    rd.get(h, "tolerance", "hash.", c.mac.classifier.tolerance);
  }
  rd.require(c.mac.classifier.C > 0, "hash.C: must be > 0");
  rd.require(c.mac.classifier.max_epochs >= 1, "hash.epochs: must be >= 1");
  rd.require(!c.rbf || (c.rbf_centers >= 1 && c.rbf_centers <= c.train), "hash.centers: must be in [1, split.train]");

  if (const json* m = rd.object(j, "mac", "", {"solver", "mu1", "alpha", "max_iterations", "zstep_maxit",
                                                "free_code_sweeps", "validation_gate", "init", "record_time"})) {
    std::string solver = "cut", init = "pca";
    rd.get(m, "solver", "mac.", solver);
    try {
      c.mac.solver = parse_solver(solver);
    } catch (const std::exception& e) {
      rd.errors.push_back(std::string("mac.solver: ") + e.what());
    }
    if (m->contains("mu1")) {
      const auto& v = m->at("mu1");
      if (v.is_number()) {
        c.mu1_mode = "value";
        c.mac.mu1 = v.get<double>();
        rd.require(c.mac.mu1 > 0, "mac.mu1: must be > 0");
      } else if (v.is_string() && (v == "default" || v == "estimate")) {
        c.mu1_mode = v.get<std::string>();
      } else {
        rd.errors.push_back("mac.mu1: expected a number, \"default\" or \"estimate\"");
      }
    }
    rd.get(m, "alpha", "mac.", c.mac.alpha);
    rd.get(m, "max_iterations", "mac.", c.mac.max_iterations);
    rd.get(m, "zstep_maxit", "mac.", c.mac.zstep_maxit);
    rd.get(m, "free_code_sweeps", "mac.", c.mac.free_code_sweeps);
    rd.get(m, "validation_gate", "mac.", c.mac.validation_gate);
    rd.get(m, "record_time", "mac.", c.mac.record_time);
    rd.get(m, "init", "mac.", init);
    if (init == "random") c.mac.init = InitKind::random;
    else if (init != "pca") rd.errors.push_back("mac.init: expected pca or random");
  }
  if (c.mu1_mode != "value") c.mac.mu1 = default_mu1(c.mac.solver);
  rd.require(c.mac.alpha > 1, "mac.alpha: must be > 1");
  rd.require(c.mac.max_iterations >= 0, "mac.max_iterations: must be >= 0");
  rd.require(c.mac.zstep_maxit >= 1, "mac.zstep_maxit: must be >= 1");
  rd.require(c.mac.free_code_sweeps >= 0, "mac.free_code_sweeps: must be >= 0");
  rd.require(!c.mac.validation_gate || c.validation > 0, "split.validation: must be > 0 when mac.validation_gate is on");

  if (const json* e = rd.object(j, "eval", "", {"ground_truth", "K", "k_grid", "validation_k"})) {
    std::string truth = "same-label";
    rd.get(e, "ground_truth", "eval.", truth);
    if (truth == "knn") c.truth = TruthMode::knn;
    else if (truth != "same-label") rd.errors.push_back("eval.ground_truth: expected same-label or knn");
    rd.get(e, "K", "eval.", c.truth_k);
    rd.get(e, "validation_k", "eval.", c.validation_k);
    if (e->contains("k_grid")) {
      try {
        c.k_grid = e->at("k_grid").get<std::vector<std::size_t>>();
      } catch (const std::exception&) {
        rd.errors.push_back("eval.k_grid: expected a list of positive integers");
      }
    }
  }
  rd.require(c.validation_k >= 1, "eval.validation_k: must be >= 1");
  rd.require(c.truth != TruthMode::knn || c.truth_k >= 1, "eval.K: must be >= 1");
  const bool labels_needed = !c.pseudolabels || c.truth == TruthMode::same_label;
  rd.require(!labels_needed || c.synthetic || c.label_column,
             "dataset.label_column: labels are required by supervised affinities or same-label ground truth");
  if (!rd.errors.empty()) throw ConfigError(rd.errors);
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError({"cannot parse " + path.string() + ": " + e.what()});
  }
  return parse_config(j);
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["output"] = c.output.string();
  j["arm"] = arm_name(c.arm);
  json d = json::object();
  if (c.synthetic) {
    const auto& s = *c.synthetic;
    d["synthetic"] = {{"classes", s.classes}, {"points_per_class", s.points_per_class}, {"dim", s.dim},
                      {"separation", s.separation}, {"noise", s.noise}, {"seed", s.seed}};
  } else {
    d["path"] = c.data_path.string();
    d["format"] = c.data_format == DataFormat::csv ? "csv" : "dense-binary";
    d["label_column"] = c.label_column;
  }
  j["dataset"] = d;
  j["split"] = {{"train", c.train}, {"validation", c.validation}, {"test", c.test}};
  j["loss"] = {{"kind", to_string(c.loss.kind)}, {"bits", c.loss.bits}, {"lambda", c.loss.lambda}};
  j["affinity"] = {{"mode", c.pseudolabels ? "pseudolabel" : "supervised"},
                   {"positives", c.positives},
                   {"negatives", c.negatives},
                   {"metric", c.metric == Metric::cosine ? "cosine" : "euclidean"}};
  j["hash"] = {{"kind", c.rbf ? "rbf" : "linear"},
               {"centers", c.rbf_centers},
               {"C", c.mac.classifier.C},
               {"epochs", c.mac.classifier.max_epochs},
               {"tolerance", c.mac.classifier.tolerance}};
  json m = {{"solver", to_string(c.mac.solver)},
            {"alpha", c.mac.alpha},
            {"max_iterations", c.mac.max_iterations},
            {"zstep_maxit", c.mac.zstep_maxit},
            {"free_code_sweeps", c.mac.free_code_sweeps},
            {"validation_gate", c.mac.validation_gate},
            {"init", c.mac.init == InitKind::pca ? "pca" : "random"},
            {"record_time", c.mac.record_time}};
  if (c.mu1_mode == "value")
    m["mu1"] = c.mac.mu1;
  else
    m["mu1"] = c.mu1_mode;
  j["mac"] = m;
  j["eval"] = {{"ground_truth", c.truth == TruthMode::knn ? "knn" : "same-label"},
               {"K", c.truth_k},
               {"k_grid", c.k_grid},
               {"validation_k", c.validation_k}};
  return j;
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  const Dataset data = cfg.synthetic ? gen_synthetic(*cfg.synthetic)
                                     : load_dataset(cfg.data_path, cfg.data_format, cfg.label_column);
  const auto split_seed = subseed(cfg.seed, "split");
  const Split split = make_split(data.size(), cfg.train, cfg.validation, cfg.test, split_seed);
  validate(split, data.size(), cfg.mac.validation_gate);
  const Dataset train = data.subset(split.train);
  const Dataset val = data.subset(split.validation);
  const Dataset test = data.subset(split.test);

  const auto affinity_seed = subseed(cfg.seed, "affinity");
  AffinityGraph graph = cfg.pseudolabels
                            ? build_pseudolabel_affinities(train, cfg.positives, cfg.negatives, cfg.metric, affinity_seed)
                            : build_supervised_affinities(train, cfg.positives, cfg.negatives, affinity_seed);
  if (cfg.loss.kind == LossKind::ee) graph = to_ee_affinities(graph);
  if (cfg.loss.kind == LossKind::bre) graph = to_bre_affinities(graph, train);

  const auto rbf_seed = subseed(cfg.seed, "rbf-centers");
  const FeatureMap map = cfg.rbf ? make_rbf_map(train.features, cfg.rbf_centers, rbf_seed) : identity_map(train.dim());
  Blocks blocks = (!cfg.pseudolabels && train.labels) ? blocks_from_labels(*train.labels) : blocks_from_affinities(graph);

  MacConfig mc = cfg.mac;
  mc.init_seed = subseed(cfg.seed, "init");
  mc.classifier_seed = subseed(cfg.seed, "classifier");
  LossSpec spec = cfg.loss;
  MacContext ctx(train.features, spec, graph, map, mc, blocks);

  const GroundTruth val_truth = build_ground_truth(train, val, cfg.truth, cfg.truth_k, cfg.metric);
  const GroundTruth test_truth = build_ground_truth(train, test, cfg.truth, cfg.truth_k, cfg.metric);
  const std::size_t val_k = std::min(cfg.validation_k, train.size());
  ValidationFn validation;
  if (val.size() > 0) {
    validation = [&](const HashModel& h) {
      return mean_precision_at_k(ctx.codes(h), hash_apply(h, val.features), val_truth, val_k);
    };
  }

  TwoStepResult init = two_step(ctx, validation);
  double mu1 = mc.mu1;
  if (cfg.mu1_mode == "estimate") mu1 = estimate_mu1(ctx, init.free, ctx.codes(init.model));
  mc.mu1 = mu1;
  MacContext mac_ctx(train.features, spec, graph, map, mc, blocks);

  ExperimentOutcome outcome;
  auto evaluate = [&](const HashModel& h) {
    return evaluate_retrieval(ctx.codes(h), hash_apply(h, test.features), test_truth, cfg.k_grid);
  };
  if (cfg.arm != Arm::mac) outcome.arms.push_back({"two_step", init.model, init.trace, evaluate(init.model)});
  if (cfg.arm != Arm::two_step) {
    const MacResult mac = mac_optimize(mac_ctx, validation, &init);
    outcome.arms.push_back({"mac", mac.model, mac.trace, evaluate(mac.model)});
  }

  json manifest;
  manifest["format"] = "machash-manifest";
  manifest["version"] = 1;
  manifest["config"] = config_to_json(cfg);
  manifest["config_hash"] = hex(fnv1a(config_to_json(cfg).dump()));
  manifest["seeds"] = {{"master", cfg.seed},           {"split", split_seed},      {"affinity", affinity_seed},
                       {"rbf_centers", rbf_seed},      {"init", mc.init_seed},     {"classifier", mc.classifier_seed},
                       {"synthetic", cfg.synthetic ? cfg.synthetic->seed : 0}};
  manifest["mu1"] = mu1;
  manifest["versions"] = {{"machash", kVersion},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)},
                          {"compiler", __VERSION__}};
  manifest["inputs"] = {{"dataset", hex(digest(data))},
                        {"affinities", hex(digest(graph))},
                        {"initializer", hex(digest(init.free))}};
  outcome.manifest = manifest;

  fs::create_directories(cfg.output);
  write_text(cfg.output / "manifest.json", manifest.dump(1) + "\n");
  for (const auto& arm : outcome.arms) {
    const fs::path dir = cfg.output / arm.name;
    fs::create_directories(dir);
    emit_trace(arm.trace, dir / "trace.csv");
    write_text(dir / "report.json", report_to_json(arm.report) + "\n");
    write_text(dir / "report.csv", report_to_csv(arm.report));
    save_model(arm.model, dir / "model.json");
    json m = manifest;
    m["arm"] = arm.name;
    write_text(dir / "manifest.json", m.dump(1) + "\n");
  }
  if (outcome.arms.size() == 2) {
    const auto& a = outcome.arms[0];
    const auto& b = outcome.arms[1];
    write_text(cfg.output / "comparison.json", compare_arms(a.trace, a.report, b.trace, b.report).dump(1) + "\n");
  }
  return outcome;
}

namespace {

const TraceRow& final_row(const MacTrace& t) {
  if (t.empty()) throw std::invalid_argument("empty trace");
  for (auto it = t.rbegin(); it != t.rend(); ++it)
    if (it->accepted) return *it;
  return t.front();
}

}  // namespace

json compare_arms(const MacTrace& ta, const RetrievalReport& ra, const MacTrace& tb, const RetrievalReport& rb) {
  const auto& fa = final_row(ta);
  const auto& fb = final_row(tb);
  json out;
  out["loss_a"] = fa.loss;
  out["loss_b"] = fb.loss;
  out["delta_loss"] = fb.loss - fa.loss;
  json pk = json::array();
  for (std::size_t i = 0; i < ra.k_grid.size(); ++i)
    for (std::size_t j = 0; j < rb.k_grid.size(); ++j)
      if (ra.k_grid[i] == rb.k_grid[j])
        pk.push_back({{"k", ra.k_grid[i]}, {"delta", rb.precision_at_k[j] - ra.precision_at_k[i]}});
  out["delta_precision_at_k"] = pk;
  json pr = json::array();
  for (std::size_t r = 0; r < std::min(ra.pr.size(), rb.pr.size()); ++r)
    pr.push_back({{"radius", ra.pr[r].radius},
                  {"delta_precision", rb.pr[r].precision - ra.pr[r].precision},
                  {"delta_recall", rb.pr[r].recall - ra.pr[r].recall}});
  out["delta_pr"] = pr;
  const bool has_val = !std::isnan(fa.val_precision) && !std::isnan(fb.val_precision);
  out["checks"] = {{"loss_not_worse", fb.loss <= fa.loss},
                   {"loss_strictly_better", fb.loss < fa.loss},
                   {"validation_not_worse", has_val ? json(fb.val_precision >= fa.val_precision) : json(nullptr)}};
  return out;
}

json compare_arms(const fs::path& a, const fs::path& b) {
  for (const auto& dir : {a, b})
    if (!fs::exists(dir / "manifest.json")) throw std::invalid_argument("missing manifest in " + dir.string());
  const json ma = json::parse(read_text(a / "manifest.json"));
  const json mb = json::parse(read_text(b / "manifest.json"));
  if (ma.value("inputs", json()) != mb.value("inputs", json()))
    throw std::invalid_argument("mismatched experiment manifests: arms ran on different data, affinities or initializer");
  json out = compare_arms(load_trace(a / "trace.csv"), report_from_json(read_text(a / "report.json")),
                          load_trace(b / "trace.csv"), report_from_json(read_text(b / "report.json")));
  out["a"] = ma.value("arm", a.string());
  out["b"] = mb.value("arm", b.string());
  return out;
}

}  // namespace machash
