#include "machash/affinity.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

namespace machash {

namespace {

/// First `k` entries of `pool` become a uniform sample without replacement.
void partial_shuffle(std::vector<std::uint32_t>& pool, std::size_t k, std::mt19937_64& rng) {
  k = std::min(k, pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
}

void count(AffinityGraph& g) {
  g.positives.assign(g.points, 0);
  g.negatives.assign(g.points, 0);
  for (const auto& p : g.pairs) {
    if (p.y > 0)
      ++g.positives[p.n];
    else
      ++g.negatives[p.n];
  }
}

}  // namespace

void validate(const AffinityGraph& g) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  for (std::size_t k = 0; k < g.pairs.size(); ++k) {
    const auto& p = g.pairs[k];
    if (p.n >= g.points || p.m >= g.points)
      throw std::out_of_range("pair " + std::to_string(k) + " index out of range");
    if (p.n == p.m) throw std::invalid_argument("pair " + std::to_string(k) + " is a self pair");
    if (!seen.emplace(p.n, p.m).second)
      throw std::invalid_argument("duplicate pair (" + std::to_string(p.n) + "," + std::to_string(p.m) + ")");
  }
}

AffinityGraph build_supervised_affinities(const Dataset& d, std::size_t positives,
                                          std::size_t negatives, std::uint64_t seed) {
  if (!d.labels) throw std::invalid_argument("supervised affinities need labels");
  const auto& labels = *d.labels;
  std::map<int, std::vector<std::uint32_t>> by_class;
  for (std::size_t n = 0; n < d.size(); ++n) by_class[labels[n]].push_back(static_cast<std::uint32_t>(n));
  if (by_class.size() < 2 && negatives > 0)
    throw std::invalid_argument("single-class dataset cannot supply dissimilar pairs");

  AffinityGraph g;
  g.points = d.size();
  std::mt19937_64 rng(seed);
  std::vector<std::uint32_t> pool;
  for (std::size_t n = 0; n < d.size(); ++n) {
    const int label = labels[n];
    if (positives > 0) {
      pool.clear();
      for (auto m : by_class[label])
        if (m != n) pool.push_back(m);
      partial_shuffle(pool, positives, rng);
      for (auto m : pool) g.pairs.push_back({static_cast<std::uint32_t>(n), m, 1.0, 0.0});
    }
    if (negatives > 0) {
      pool.clear();
      for (std::size_t m = 0; m < d.size(); ++m)
        if (labels[m] != label) pool.push_back(static_cast<std::uint32_t>(m));
      partial_shuffle(pool, negatives, rng);
      for (auto m : pool) g.pairs.push_back({static_cast<std::uint32_t>(n), m, -1.0, 0.0});
    }
  }
  count(g);
  return g;
}

AffinityGraph build_pseudolabel_affinities(const Dataset& d, std::size_t positives,
                                           std::size_t negatives, Metric metric,
                                           std::uint64_t seed) {
  if (positives >= d.size())
    throw std::invalid_argument("positive count " + std::to_string(positives) +
                                " must be smaller than N = " + std::to_string(d.size()));
  const FeatureMatrix x = metric == Metric::cosine ? center_and_normalize(d.features) : d.features;
  AffinityGraph g;
  g.points = d.size();
  std::mt19937_64 rng(seed);
  std::vector<char> taken(d.size());
  std::vector<std::uint32_t> pool;
  for (std::size_t n = 0; n < d.size(); ++n) {
    const auto nn = nearest_neighbors(x, x.row(static_cast<Eigen::Index>(n)), positives, n);
    std::fill(taken.begin(), taken.end(), 0);
    taken[n] = 1;
    for (auto m : nn) {
      taken[m] = 1;
      g.pairs.push_back({static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(m), 1.0, 0.0});
    }
    if (negatives > 0) {
      pool.clear();
      for (std::size_t m = 0; m < d.size(); ++m)
        if (!taken[m]) pool.push_back(static_cast<std::uint32_t>(m));
      partial_shuffle(pool, negatives, rng);
      for (auto m : pool) g.pairs.push_back({static_cast<std::uint32_t>(n), m, -1.0, 0.0});
    }
  }
  count(g);
  return g;
}

AffinityGraph to_ee_affinities(const AffinityGraph& g) {
  AffinityGraph out = g;
  for (auto& p : out.pairs) {
    const bool similar = p.y > 0;
    p.y = similar ? 1.0 : 0.0;
    p.y_neg = similar ? 0.0 : 1.0;
  }
  return out;
}

AffinityGraph to_bre_affinities(const AffinityGraph& g, const Dataset& d, double scale) {
  AffinityGraph out = g;
  for (auto& p : out.pairs) {
    p.y = scale * 0.5 * (d.features.row(p.n) - d.features.row(p.m)).squaredNorm();
    p.y_neg = 0.0;
  }
  return out;
}

void save_affinities(const AffinityGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "n,m,y,y_neg\n";
  char buf[96];
  for (const auto& p : g.pairs) {
    std::snprintf(buf, sizeof buf, "%u,%u,%.17g,%.17g\n", p.n, p.m, p.y, p.y_neg);
    out << buf;
  }
}

AffinityGraph load_affinities(const std::filesystem::path& path, std::size_t points) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  AffinityGraph g;
  g.points = points;
  std::string line;
  std::getline(in, line);
  if (line.rfind("n,m,y", 0) != 0) throw std::invalid_argument("affinity file lacks n,m,y,y_neg header");
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    AffinityPair p;
    if (std::sscanf(line.c_str(), "%u,%u,%lf,%lf", &p.n, &p.m, &p.y, &p.y_neg) < 3)
      throw std::invalid_argument("malformed affinity row " + std::to_string(row));
    g.pairs.push_back(p);
  }
  validate(g);
  count(g);
  return g;
}

}  // namespace machash
