#include "machash/hstep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace machash {

using nlohmann::json;

FeatureMatrix FeatureMap::apply(const FeatureMatrix& x) const {
  if (x.cols() != input_dim)
    throw std::invalid_argument("feature dimension " + std::to_string(x.cols()) + " != model input " +
                                std::to_string(input_dim));
  if (kind == Kind::identity) return x;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  FeatureMatrix phi(x.rows(), centers.rows());
  const Eigen::VectorXd xn = x.rowwise().squaredNorm();
  const Eigen::VectorXd cn = centers.rowwise().squaredNorm();
  const Eigen::MatrixXd cross = x * centers.transpose();
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index j = 0; j < centers.rows(); ++j)
      phi(r, j) = std::exp(-std::max(0.0, xn(r) + cn(j) - 2.0 * cross(r, j)) * inv);
  return phi;
}

FeatureMap identity_map(int dim) {
  FeatureMap m;
  m.kind = FeatureMap::Kind::identity;
  m.input_dim = dim;
  return m;
}

FeatureMap make_rbf_map(const FeatureMatrix& x, std::size_t centers, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (centers == 0 || centers > n)
    throw std::invalid_argument("RBF center count must be in [1, N]");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < centers; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  FeatureMap m;
  m.kind = FeatureMap::Kind::rbf;
  m.input_dim = static_cast<int>(x.cols());
  m.centers.resize(static_cast<Eigen::Index>(centers), x.cols());
  for (std::size_t i = 0; i < centers; ++i)
    m.centers.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));

  const auto first = std::min<std::size_t>(300, n);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t a = 0; a < first; ++a)
    for (std::size_t b = a + 1; b < first; ++b) {
      total += (x.row(static_cast<Eigen::Index>(a)) - x.row(static_cast<Eigen::Index>(b))).norm();
      ++count;
    }
  m.sigma = count ? total / static_cast<double>(count) : 0.0;
  if (!(m.sigma > 0)) throw std::invalid_argument("RBF bandwidth is zero (duplicate points)");
  return m;
}

LinearClassifier train_bit_classifier(const FeatureMatrix& features, std::span<const int> targets,
                                      const ClassifierConfig& cfg, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(features.rows());
  const auto d = features.cols();
  if (n == 0) throw std::invalid_argument("classifier needs at least one sample");
  if (targets.size() != n) throw std::invalid_argument("target count != sample count");
  if (!(cfg.C > 0)) throw std::invalid_argument("classifier C must be > 0");
  if (!features.allFinite()) throw std::invalid_argument("non-finite classifier features");
  for (int t : targets)
    if (t != 1 && t != -1) throw std::invalid_argument("classifier targets must be +-1");

  // Dual of 0.5 |v|^2 + C sum hinge, v = (w, c) on features (x, 1).
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double c = 0.0;
  std::vector<double> alpha(n, 0.0), qdiag(n);
  for (std::size_t i = 0; i < n; ++i) qdiag[i] = features.row(static_cast<Eigen::Index>(i)).squaredNorm() + 1.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (auto i : order) {
      const auto row = features.row(static_cast<Eigen::Index>(i));
      const double t = targets[i];
      const double grad = t * (row.dot(w) + c) - 1.0;
      double pg = grad;
      if (alpha[i] == 0.0)
        pg = std::min(grad, 0.0);
      else if (alpha[i] == cfg.C)
        pg = std::max(grad, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (pg == 0.0) continue;
      const double next = std::clamp(alpha[i] - grad / qdiag[i], 0.0, cfg.C);
      const double delta = (next - alpha[i]) * t;
      alpha[i] = next;
      w += delta * row.transpose();
      c += delta;
    }
    if (pg_max - pg_min <= cfg.tolerance) break;
  }
  return {w, c};
}

double hinge_objective(const FeatureMatrix& features, std::span<const int> targets,
                       const LinearClassifier& clf, double C) {
  double s = (clf.weights.squaredNorm() + clf.bias * clf.bias) / (2.0 * C);
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    s += std::max(0.0, 1.0 - targets[static_cast<std::size_t>(i)] * (features.row(i).dot(clf.weights) + clf.bias));
  return s;
}

LinearClassifier HashModel::classifier(int bit) const {
  return {weights.row(bit).transpose(), bias(bit)};
}

void HashModel::set_classifier(int bit, const LinearClassifier& clf) {
  weights.row(bit) = clf.weights.transpose();
  bias(bit) = clf.bias;
}

HashModel fit_hash(const FeatureMatrix& x, const CodeMatrix& z, const ClassifierConfig& cfg,
                   const FeatureMap& map, std::uint64_t seed) {
  if (z.points() != static_cast<std::size_t>(x.rows()))
    throw std::invalid_argument("code matrix has " + std::to_string(z.points()) + " columns for " +
                                std::to_string(x.rows()) + " points");
  const FeatureMatrix phi = map.apply(x);
  HashModel h;
  h.map = map;
  h.weights.resize(z.bits(), phi.cols());
  h.bias.resize(z.bits());
  for (int bit = 0; bit < z.bits(); ++bit) {
    const auto targets = z.row(bit);
    h.set_classifier(bit, train_bit_classifier(phi, targets, cfg, seed));
  }
  return h;
}

CodeMatrix hash_apply_mapped(const HashModel& h, const FeatureMatrix& phi) {
  if (phi.cols() != h.weights.cols()) throw std::invalid_argument("mapped feature dimension mismatch");
  CodeMatrix out(h.bits(), static_cast<std::size_t>(phi.rows()));
  const Eigen::MatrixXd scores = (phi * h.weights.transpose()).rowwise() + h.bias.transpose();
  for (Eigen::Index n = 0; n < phi.rows(); ++n)
    for (int bit = 0; bit < h.bits(); ++bit) out.set(bit, static_cast<std::size_t>(n), sign_of(scores(n, bit)));
  return out;
}

CodeMatrix hash_apply(const HashModel& h, const FeatureMatrix& x) {
  return hash_apply_mapped(h, h.map.apply(x));
}

namespace {

json matrix_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw std::invalid_argument("ragged matrix in model file");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

}  // namespace

std::string model_to_json(const HashModel& h) {
  json j;
  j["format"] = "machash-model";
  j["version"] = 1;
  j["map"] = h.map.kind == FeatureMap::Kind::identity ? "identity" : "rbf";
  j["input_dim"] = h.map.input_dim;
  if (h.map.kind == FeatureMap::Kind::rbf) {
    j["sigma"] = h.map.sigma;
    j["centers"] = matrix_json(h.map.centers);
  }
  j["weights"] = matrix_json(h.weights);
  j["bias"] = std::vector<double>(h.bias.data(), h.bias.data() + h.bias.size());
  return j.dump(1);
}

HashModel model_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("format", "") != "machash-model") throw std::invalid_argument("not a machash model file");
  if (j.at("version").get<int>() != 1) throw std::invalid_argument("unsupported model version");
  HashModel h;
  h.map.input_dim = j.at("input_dim").get<int>();
  const auto kind = j.at("map").get<std::string>();
  if (kind == "rbf") {
    h.map.kind = FeatureMap::Kind::rbf;
    h.map.sigma = j.at("sigma").get<double>();
    h.map.centers = matrix_from_json(j.at("centers"), h.map.input_dim);
  } else if (kind != "identity") {
    throw std::invalid_argument("unknown feature map '" + kind + "'");
  }
  const auto bias = j.at("bias").get<std::vector<double>>();
  h.weights = matrix_from_json(j.at("weights"), h.map.output_dim());
  if (static_cast<std::size_t>(h.weights.rows()) != bias.size())
    throw std::invalid_argument("bias length != bit count");
  h.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()));
  return h;
}

void save_model(const HashModel& h, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << model_to_json(h) << '\n';
}

HashModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace machash
