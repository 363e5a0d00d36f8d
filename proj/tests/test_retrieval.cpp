#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "machash/retrieval.hpp"
#include "oracles.hpp"

using namespace machash;

namespace {

GroundTruth random_truth(std::size_t queries, std::size_t base, std::mt19937_64& rng, bool allow_empty) {
  GroundTruth gt;
  std::bernoulli_distribution take(0.2);
  for (std::size_t q = 0; q < queries; ++q) {
    std::vector<std::uint32_t> t;
    for (std::uint32_t n = 0; n < base; ++n)
      if (take(rng)) t.push_back(n);
    if (t.empty() && !allow_empty) t.push_back(0);
    gt.neighbors.push_back(t);
  }
  return gt;
}

struct NaivePr {
  double precision = 0.0;
  double recall = 0.0;
  std::size_t excluded = 0;
};

NaivePr naive_pr(const CodeMatrix& base, const CodeMatrix& queries, const GroundTruth& truth, int r) {
  NaivePr out;
  std::size_t recall_count = 0;
  for (std::size_t q = 0; q < queries.points(); ++q) {
    std::set<std::size_t> retrieved;
    const auto qc = queries.column(q);
    for (std::size_t n = 0; n < base.points(); ++n) {
      int d = 0;
      for (int i = 0; i < base.bits(); ++i) d += base.at(i, n) != qc[static_cast<std::size_t>(i)];
      if (d <= r) retrieved.insert(n);
    }
    const std::set<std::size_t> t(truth.neighbors[q].begin(), truth.neighbors[q].end());
    std::size_t hits = 0;
    for (auto n : retrieved) hits += t.count(n);
    out.precision += retrieved.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(retrieved.size());
    if (t.empty()) {
      ++out.excluded;
    } else {
      out.recall += static_cast<double>(hits) / static_cast<double>(t.size());
      ++recall_count;
    }
  }
  out.precision /= static_cast<double>(queries.points());
  if (recall_count) out.recall /= static_cast<double>(recall_count);
  return out;
}

Dataset gaussian_set(std::size_t n, int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  FeatureMatrix x(static_cast<Eigen::Index>(n), dim);
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = g(rng);
  return make_dataset(x);
}

}  // namespace

TEST_CASE("hamming knn worked cases") {
  const CodeMatrix base = CodeMatrix::from_rows({{1, -1, 1, -1}, {1, 1, -1, -1}});
  CHECK(hamming_knn(base, base.word(2), 1) == std::vector<std::size_t>{2});
  CHECK(hamming_knn(base, base.word(2), 4) == std::vector<std::size_t>{2, 0, 3, 1});
  CHECK(hamming_knn(base, base.word(2), 2, 2) == std::vector<std::size_t>{0, 3});
  const CodeMatrix same(3, 6);
  CHECK(hamming_knn(same, same.word(0), 4) == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK_THROWS(hamming_knn(same, same.word(0), 7));
}

TEST_CASE("hamming knn equals the naive distance oracle") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 50; ++rep) {
    const int b = 1 + rep % 16;
    const std::size_t n = 20 + static_cast<std::size_t>(rep * 9);
    const CodeMatrix base = oracle::random_codes(b, n, rng);
    const CodeMatrix q = oracle::random_codes(b, 1, rng);
    const std::size_t k = 1 + static_cast<std::size_t>(rep) % n;
    CHECK(hamming_knn(base, q.word(0), k) == oracle::hamming_knn(base, q.column(0), k));
    CHECK(hamming_knn(base, base.word(3), k - (k == n), 3) == oracle::hamming_knn(base, base.column(3), k - (k == n), 3));
  }
}

TEST_CASE("precision at k counting") {
  const std::vector<std::uint32_t> truth{1, 3, 5, 7, 9};
  CHECK(precision_at_k(std::vector<std::size_t>{1, 5, 9}, truth) == 1.0);
  CHECK(precision_at_k(std::vector<std::size_t>{0, 2}, truth) == 0.0);
  CHECK(precision_at_k(std::vector<std::size_t>{1, 3, 5, 10, 11, 12, 13, 14, 15, 16}, truth) == doctest::Approx(0.3));
  CHECK_THROWS(precision_at_k(std::vector<std::size_t>{}, truth));
}

TEST_CASE("radius precision and recall equal the naive set oracle") {
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 50; ++rep) {
    const int b = 1 + rep % 16;
    const std::size_t n = 20 + static_cast<std::size_t>(rep * 9);
    const CodeMatrix base = oracle::random_codes(b, n, rng);
    const CodeMatrix queries = oracle::random_codes(b, 7, rng);
    const GroundTruth gt = random_truth(7, n, rng, true);
    for (int r = 0; r <= b; ++r) {
      const PrPoint got = pr_at_radius(base, queries, gt, r);
      const NaivePr expect = naive_pr(base, queries, gt, r);
      CHECK(got.precision == doctest::Approx(expect.precision).epsilon(1e-14));
      CHECK(got.recall == doctest::Approx(expect.recall).epsilon(1e-14));
      CHECK(got.excluded == expect.excluded);
    }
  }
}

TEST_CASE("radius b retrieves the whole base") {
  std::mt19937_64 rng(5);
  const CodeMatrix base = oracle::random_codes(6, 40, rng), queries = oracle::random_codes(6, 5, rng);
  const GroundTruth gt = random_truth(5, 40, rng, false);
  const PrPoint p = pr_at_radius(base, queries, gt, 6);
  double mean = 0.0;
  for (const auto& t : gt.neighbors) mean += static_cast<double>(t.size()) / 40.0;
  CHECK(p.recall == 1.0);
  CHECK(p.precision == doctest::Approx(mean / 5.0));
  const auto curve = pr_curve(base, queries, gt);
  REQUIRE(curve.size() == 7);
  for (std::size_t r = 1; r < curve.size(); ++r) CHECK(curve[r].recall >= curve[r - 1].recall);
  CHECK_THROWS(pr_at_radius(base, queries, gt, 7));
}

TEST_CASE("a query with no code match at radius zero scores zero precision") {
  const CodeMatrix base = CodeMatrix::from_rows({{1, 1, -1}, {1, -1, 1}});
  const CodeMatrix queries = CodeMatrix::from_rows({{-1}, {-1}});
  GroundTruth gt;
  gt.neighbors = {{0, 1, 2}};
  const PrPoint p = pr_at_radius(base, queries, gt, 0);
  CHECK(p.precision == 0.0);
  CHECK(p.recall == 0.0);
}

TEST_CASE("queries with empty truth are left out of recall and tallied") {
  const CodeMatrix base(2, 3);
  const CodeMatrix queries(2, 2);
  GroundTruth gt;
  gt.neighbors = {{}, {0}};
  const PrPoint p = pr_at_radius(base, queries, gt, 2);
  CHECK(p.excluded == 1);
  CHECK(p.recall == 1.0);
  CHECK(p.precision == doctest::Approx((0.0 + 1.0 / 3.0) / 2.0));
}

TEST_CASE("effective bits closed forms") {
  CHECK(effective_bits(CodeMatrix(5, 10)) == 0.0);
  CHECK(effective_bits(CodeMatrix::from_rows({{1, 1, -1, -1}, {1, -1, 1, -1}})) == doctest::Approx(2.0).epsilon(1e-15));
  const double expect = -(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25));
  CHECK(std::abs(effective_bits(CodeMatrix::from_rows({{1, 1, 1, -1}})) - expect) <= 1e-12);
  CHECK(expect == doctest::Approx(0.8113).epsilon(1e-4));
}

TEST_CASE("effective bits stays within its bounds and ignores relabelling") {
  std::mt19937_64 rng(66);
  for (int rep = 0; rep < 50; ++rep) {
    const int b = 1 + rep % 16;
    const std::size_t n = 1 + static_cast<std::size_t>(rep * 7);
    const CodeMatrix z = oracle::random_codes(b, n, rng);
    const double e = effective_bits(z);
    CHECK(e >= 0.0);
    CHECK(e <= std::min<double>(b, std::log2(static_cast<double>(n))) + 1e-12);
    std::vector<std::vector<int>> rows;
    for (int i = b - 1; i >= 0; --i) {
      auto row = z.row(i);
      for (auto& v : row) v = -v;
      rows.push_back(row);
    }
    CHECK(effective_bits(CodeMatrix::from_rows(rows)) == doctest::Approx(e).epsilon(1e-14));
  }
}

TEST_CASE("same-label truth sets") {
  std::vector<int> labels;
  for (int i = 0; i < 100; ++i) labels.push_back(i % 2);
  FeatureMatrix x = FeatureMatrix::Zero(100, 1);
  const Dataset base = make_dataset(x, labels);
  const GroundTruth gt = build_ground_truth(base, base, TruthMode::same_label, 0);
  for (const auto& t : gt.neighbors) CHECK(t.size() == 50);
  std::vector<std::int64_t> self(100);
  std::iota(self.begin(), self.end(), 0);
  const GroundTruth ex = build_ground_truth(base, base, TruthMode::same_label, 0, Metric::euclidean, self, true);
  for (std::size_t q = 0; q < 100; ++q) {
    CHECK(ex.neighbors[q].size() == 49);
    CHECK(std::find(ex.neighbors[q].begin(), ex.neighbors[q].end(), q) == ex.neighbors[q].end());
  }
  CHECK_THROWS(build_ground_truth(make_dataset(x), make_dataset(x), TruthMode::same_label, 0));
}

TEST_CASE("knn truth equals brute force") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 30 + static_cast<std::size_t>(rep * 9);
    const Dataset base = gaussian_set(n, 4, rng);
    const Dataset queries = gaussian_set(5, 4, rng);
    const std::size_t k = 1 + static_cast<std::size_t>(rep % 20);
    const GroundTruth gt = build_ground_truth(base, queries, TruthMode::knn, k);
    for (std::size_t q = 0; q < 5; ++q) {
      std::vector<std::pair<double, std::uint32_t>> d;
      for (std::uint32_t m = 0; m < n; ++m)
        d.push_back({(base.features.row(m) - queries.features.row(static_cast<Eigen::Index>(q))).squaredNorm(), m});
      std::sort(d.begin(), d.end());
      std::vector<std::uint32_t> expect;
      for (std::size_t j = 0; j < k; ++j) expect.push_back(d[j].second);
      std::sort(expect.begin(), expect.end());
      CHECK(gt.neighbors[q] == expect);
    }
  }
  const Dataset base = gaussian_set(10, 2, rng);
  CHECK_THROWS(build_ground_truth(base, base, TruthMode::knn, 11));
  CHECK_THROWS(build_ground_truth(base, gaussian_set(3, 3, rng), TruthMode::knn, 2));
}

TEST_CASE("retrieval report round trips through JSON and flattens to CSV") {
  std::mt19937_64 rng(12);
  const CodeMatrix base = oracle::random_codes(4, 30, rng), queries = oracle::random_codes(4, 6, rng);
  const GroundTruth gt = random_truth(6, 30, rng, false);
  const RetrievalReport r = evaluate_retrieval(base, queries, gt, kDefaultKGrid);
  CHECK(r.k_grid == std::vector<std::size_t>{1, 5, 10});
  CHECK(r.pr.size() == 5);
  CHECK(r.precision_at_k[1] == doctest::Approx(mean_precision_at_k(base, queries, gt, 5)));
  CHECK(r.effective_bits_train == effective_bits(base));
  const RetrievalReport back = report_from_json(report_to_json(r));
  CHECK(back.precision_at_k == r.precision_at_k);
  CHECK(back.k_grid == r.k_grid);
  CHECK(back.pr.size() == r.pr.size());
  CHECK(back.pr[2].recall == r.pr[2].recall);
  CHECK(back.effective_bits_test == r.effective_bits_test);
  const std::string csv = report_to_csv(r);
  CHECK(csv.rfind("metric,param,value\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 + 2 * 5 + 2);
}
