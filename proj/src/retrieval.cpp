#include "machash/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace machash {

namespace {

std::int64_t self_of(std::span<const std::int64_t> self_index, std::size_t q) {
  return self_index.empty() ? -1 : self_index[q];
}

void check_shapes(const CodeMatrix& base, const CodeMatrix& queries, const GroundTruth& truth,
                  std::span<const std::int64_t> self_index) {
  if (base.bits() != queries.bits()) throw std::invalid_argument("base and query code lengths differ");
  if (truth.neighbors.size() != queries.points()) throw std::invalid_argument("one truth set per query required");
  if (!self_index.empty() && self_index.size() != queries.points())
    throw std::invalid_argument("self index length != query count");
}

}  // namespace

GroundTruth build_ground_truth(const Dataset& base, const Dataset& queries, TruthMode mode,
                               std::size_t k, Metric metric, std::span<const std::int64_t> self_index,
                               bool exclude_self) {
  GroundTruth gt;
  gt.neighbors.resize(queries.size());
  if (mode == TruthMode::same_label) {
    if (!base.labels || !queries.labels) throw std::invalid_argument("same-label ground truth needs labels");
    std::map<int, std::vector<std::uint32_t>> by;
    for (std::size_t n = 0; n < base.size(); ++n) by[(*base.labels)[n]].push_back(static_cast<std::uint32_t>(n));
    for (std::size_t q = 0; q < queries.size(); ++q) {
      auto it = by.find((*queries.labels)[q]);
      if (it == by.end()) continue;
      auto& out = gt.neighbors[q];
      out = it->second;
      const auto self = self_of(self_index, q);
      if (exclude_self && self >= 0)
        out.erase(std::remove(out.begin(), out.end(), static_cast<std::uint32_t>(self)), out.end());
    }
    return gt;
  }
  if (base.dim() != queries.dim()) throw std::invalid_argument("base and query dimensions differ");
  if (k == 0 || k > base.size()) throw std::invalid_argument("knn ground truth needs 1 <= K <= N_base");
  FeatureMatrix b = base.features, qf = queries.features;
  if (metric == Metric::cosine) {
    // Center both with the base mean so queries live in the same frame.
    const Eigen::RowVectorXd mean = base.features.colwise().mean();
    b = base.features.rowwise() - mean;
    qf = queries.features.rowwise() - mean;
    for (Eigen::Index r = 0; r < b.rows(); ++r)
      if (b.row(r).norm() > 0) b.row(r).normalize();
    for (Eigen::Index r = 0; r < qf.rows(); ++r)
      if (qf.row(r).norm() > 0) qf.row(r).normalize();
  }
  for (std::size_t q = 0; q < queries.size(); ++q) {
    std::optional<std::size_t> skip;
    const auto self = self_of(self_index, q);
    if (exclude_self && self >= 0) skip = static_cast<std::size_t>(self);
    const auto nn = nearest_neighbors(b, qf.row(static_cast<Eigen::Index>(q)), k, skip);
    auto& out = gt.neighbors[q];
    out.assign(nn.begin(), nn.end());
    std::sort(out.begin(), out.end());
  }
  return gt;
}

std::vector<std::size_t> hamming_knn(const CodeMatrix& base, std::uint64_t query, std::size_t k,
                                     std::int64_t exclude) {
  const std::size_t available = base.points() - (exclude >= 0 && static_cast<std::size_t>(exclude) < base.points());
  if (k > available) throw std::invalid_argument("k exceeds the base size");
  // Counting sort by distance keeps ascending index order within a distance.
  std::vector<std::vector<std::size_t>> buckets(static_cast<std::size_t>(base.bits()) + 1);
  for (std::size_t n = 0; n < base.points(); ++n) {
    if (static_cast<std::int64_t>(n) == exclude) continue;
    buckets[static_cast<std::size_t>(hamming(base.word(n), query))].push_back(n);
  }
  std::vector<std::size_t> out;
  out.reserve(k);
  for (const auto& b : buckets)
    for (auto n : b) {
      if (out.size() == k) return out;
      out.push_back(n);
    }
  return out;
}

double precision_at_k(std::span<const std::size_t> retrieved, std::span<const std::uint32_t> truth) {
  if (retrieved.empty()) throw std::invalid_argument("precision of an empty retrieved list");
  std::size_t hits = 0;
  for (auto r : retrieved)
    if (std::binary_search(truth.begin(), truth.end(), static_cast<std::uint32_t>(r))) ++hits;
  return static_cast<double>(hits) / static_cast<double>(retrieved.size());
}

double mean_precision_at_k(const CodeMatrix& base, const CodeMatrix& queries, const GroundTruth& truth,
                           std::size_t k, std::span<const std::int64_t> self_index) {
  check_shapes(base, queries, truth, self_index);
  if (queries.points() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t q = 0; q < queries.points(); ++q) {
    const auto got = hamming_knn(base, queries.word(q), k, self_of(self_index, q));
    total += precision_at_k(got, truth.neighbors[q]);
  }
  return total / static_cast<double>(queries.points());
}

PrPoint pr_at_radius(const CodeMatrix& base, const CodeMatrix& queries, const GroundTruth& truth, int r,
                     std::span<const std::int64_t> self_index) {
  check_shapes(base, queries, truth, self_index);
  if (r < 0 || r > base.bits()) throw std::invalid_argument("radius must be in [0, b]");
  PrPoint pt;
  pt.radius = r;
  double psum = 0.0, rsum = 0.0;
  std::size_t rcount = 0;
  for (std::size_t q = 0; q < queries.points(); ++q) {
    const auto self = self_of(self_index, q);
    const auto& t = truth.neighbors[q];
    std::size_t retrieved = 0, hits = 0;
    for (std::size_t n = 0; n < base.points(); ++n) {
      if (static_cast<std::int64_t>(n) == self) continue;
      if (hamming(base.word(n), queries.word(q)) > r) continue;
      ++retrieved;
      if (std::binary_search(t.begin(), t.end(), static_cast<std::uint32_t>(n))) ++hits;
    }
    if (retrieved > 0) psum += static_cast<double>(hits) / static_cast<double>(retrieved);
    if (t.empty()) {
      ++pt.excluded;
    } else {
      rsum += static_cast<double>(hits) / static_cast<double>(t.size());
      ++rcount;
    }
  }
  if (queries.points() > 0) pt.precision = psum / static_cast<double>(queries.points());
  if (rcount > 0) pt.recall = rsum / static_cast<double>(rcount);
  return pt;
}

std::vector<PrPoint> pr_curve(const CodeMatrix& base, const CodeMatrix& queries, const GroundTruth& truth,
                              std::span<const std::int64_t> self_index) {
  std::vector<PrPoint> out;
  for (int r = 0; r <= base.bits(); ++r) out.push_back(pr_at_radius(base, queries, truth, r, self_index));
  return out;
}

double effective_bits(const CodeMatrix& codes) {
  if (codes.points() == 0) throw std::invalid_argument("effective bits of an empty code set");
  std::unordered_map<std::uint64_t, std::size_t> counts;
  for (auto w : codes.words()) ++counts[w];
  const double n = static_cast<double>(codes.points());
  // Sum in key order so the result does not depend on hash-map layout.
  std::vector<std::pair<std::uint64_t, std::size_t>> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  double h = 0.0;
  for (const auto& [code, c] : sorted) {
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return std::max(0.0, h);
}

RetrievalReport evaluate_retrieval(const CodeMatrix& base, const CodeMatrix& queries, const GroundTruth& truth,
                                   std::span<const std::size_t> k_grid, std::span<const std::int64_t> self_index) {
  RetrievalReport rep;
  rep.bits = base.bits();
  const bool any_self = std::any_of(self_index.begin(), self_index.end(), [](auto s) { return s >= 0; });
  const std::size_t limit = base.points() - (any_self ? 1 : 0);
  for (auto k : k_grid) {
    if (k == 0 || k > limit) continue;
    rep.k_grid.push_back(k);
    rep.precision_at_k.push_back(mean_precision_at_k(base, queries, truth, k, self_index));
  }
  rep.pr = pr_curve(base, queries, truth, self_index);
  rep.effective_bits_train = effective_bits(base);
  rep.effective_bits_test = queries.points() ? effective_bits(queries) : 0.0;
  return rep;
}

std::string report_to_json(const RetrievalReport& r) {
  nlohmann::json j;
  j["bits"] = r.bits;
  j["k"] = r.k_grid;
  j["precision_at_k"] = r.precision_at_k;
  nlohmann::json pr = nlohmann::json::array();
  for (const auto& p : r.pr)
    pr.push_back({{"radius", p.radius}, {"precision", p.precision}, {"recall", p.recall}, {"excluded", p.excluded}});
  j["pr"] = pr;
  j["effective_bits_train"] = r.effective_bits_train;
  j["effective_bits_test"] = r.effective_bits_test;
  return j.dump(1);
}

RetrievalReport report_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  RetrievalReport r;
  r.bits = j.at("bits").get<int>();
  r.k_grid = j.at("k").get<std::vector<std::size_t>>();
  r.precision_at_k = j.at("precision_at_k").get<std::vector<double>>();
  for (const auto& p : j.at("pr"))
    r.pr.push_back({p.at("radius").get<int>(), p.at("precision").get<double>(), p.at("recall").get<double>(),
                    p.at("excluded").get<std::size_t>()});
  r.effective_bits_train = j.at("effective_bits_train").get<double>();
  r.effective_bits_test = j.at("effective_bits_test").get<double>();
  return r;
}

std::string report_to_csv(const RetrievalReport& r) {
  std::ostringstream out;
  char buf[96];
  out << "metric,param,value\n";
  for (std::size_t i = 0; i < r.k_grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "precision_at_k,%zu,%.17g\n", r.k_grid[i], r.precision_at_k[i]);
    out << buf;
  }
  for (const auto& p : r.pr) {
    std::snprintf(buf, sizeof buf, "precision_at_radius,%d,%.17g\n", p.radius, p.precision);
    out << buf;
    std::snprintf(buf, sizeof buf, "recall_at_radius,%d,%.17g\n", p.radius, p.recall);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "effective_bits,train,%.17g\n", r.effective_bits_train);
  out << buf;
  std::snprintf(buf, sizeof buf, "effective_bits,test,%.17g\n", r.effective_bits_test);
  out << buf;
  return out.str();
}

}  // namespace machash
