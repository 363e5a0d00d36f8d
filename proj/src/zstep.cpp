#include "machash/zstep.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "machash/maxflow.hpp"
#include "machash/util.hpp"

namespace machash {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::size_t find_slot(const PairPattern& pat, std::size_t row, std::uint32_t col) {
  const auto first = pat.cols.begin() + static_cast<std::ptrdiff_t>(pat.row_start[row]);
  const auto last = pat.cols.begin() + static_cast<std::ptrdiff_t>(pat.row_start[row + 1]);
  return static_cast<std::size_t>(std::lower_bound(first, last, col) - pat.cols.begin());
}

}  // namespace

std::shared_ptr<const PairPattern> make_pair_pattern(const AffinityGraph& g) {
  auto pat = std::make_shared<PairPattern>();
  std::vector<std::vector<std::uint32_t>> rows(g.points);
  for (const auto& p : g.pairs) {
    if (p.n >= g.points || p.m >= g.points) throw std::out_of_range("pair index out of range");
    if (p.n == p.m) throw std::invalid_argument("self pair in affinity graph");
    rows[p.n].push_back(p.m);
    rows[p.m].push_back(p.n);
  }
  pat->row_start.assign(g.points + 1, 0);
  for (std::size_t n = 0; n < g.points; ++n) {
    auto& r = rows[n];
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    pat->row_start[n + 1] = pat->row_start[n] + r.size();
  }
  pat->cols.reserve(pat->row_start.back());
  for (const auto& r : rows) pat->cols.insert(pat->cols.end(), r.begin(), r.end());
  pat->slot_nm.resize(g.pairs.size());
  pat->slot_mn.resize(g.pairs.size());
  for (std::size_t k = 0; k < g.pairs.size(); ++k) {
    pat->slot_nm[k] = find_slot(*pat, g.pairs[k].n, g.pairs[k].m);
    pat->slot_mn[k] = find_slot(*pat, g.pairs[k].m, g.pairs[k].n);
  }
  return pat;
}

void BitProblem::multiply(std::span<const double> x, std::span<double> out) const {
  const auto& pat = *pattern;
  for (std::size_t n = 0; n < points(); ++n) {
    double s = 0.0;
    for (std::size_t k = pat.row_start[n]; k < pat.row_start[n + 1]; ++k) s += values[k] * x[pat.cols[k]];
    out[n] = s;
  }
}

double BitProblem::objective(std::span<const double> z) const {
  std::vector<double> az(points());
  multiply(z, az);
  double pen = 0.0;
  for (std::size_t n = 0; n < points(); ++n) {
    const double d = z[n] - h[n];
    pen += d * d;
  }
  return dot(z, az) + mu * pen;
}

double BitProblem::objective(std::span<const int> z) const {
  std::vector<double> zd(z.begin(), z.end());
  return objective(std::span<const double>(zd));
}

double BitProblem::coefficient_scale() const {
  double s = 0.0;
  for (double v : values) s = std::max(s, std::abs(v));
  return s;
}

double BitProblem::at(std::size_t n, std::size_t m) const {
  const auto& pat = *pattern;
  const auto k = find_slot(pat, n, static_cast<std::uint32_t>(m));
  return k < pat.row_start[n + 1] && pat.cols[k] == m ? values[k] : 0.0;
}

BitProblem assemble_bit_problem(const LossSpec& spec, const CodeMatrix& z, const AffinityGraph& g,
                                std::shared_ptr<const PairPattern> pattern, int bit,
                                std::span<const int> h_row, double mu) {
  if (bit < 0 || bit >= z.bits()) throw std::out_of_range("bit index out of range");
  if (h_row.size() != z.points() || g.points != z.points())
    throw std::invalid_argument("bit problem shapes disagree");
  BitProblem p;
  p.pattern = std::move(pattern);
  p.values.assign(p.pattern->cols.size(), 0.0);
  p.h.assign(h_row.begin(), h_row.end());
  p.mu = mu;
  CompensatedSum constant;
  const int b = z.bits();
  const std::uint64_t bit_mask = std::uint64_t{1} << bit;
  // Surrogates memoized by context for runs of pairs with equal affinities.
  std::vector<SurrogateCoeff> memo(static_cast<std::size_t>(2 * b + 1));
  std::vector<char> known(memo.size(), 0);
  double memo_y = std::numeric_limits<double>::quiet_NaN(), memo_y_neg = memo_y;
  for (std::size_t k = 0; k < g.pairs.size(); ++k) {
    const auto& pr = g.pairs[k];
    if (pr.y != memo_y || pr.y_neg != memo_y_neg) {
      std::fill(known.begin(), known.end(), 0);
      memo_y = pr.y;
      memo_y_neg = pr.y_neg;
    }
    const std::uint64_t wn = z.word(pr.n), wm = z.word(pr.m);
    const int own = ((wn ^ wm) & bit_mask) ? -1 : 1;
    const int context = code_dot(wn, wm, b) - own;
    const auto slot = static_cast<std::size_t>(context + b);
    if (!known[slot]) {
      memo[slot] = bit_surrogate_from_context(spec, context, pr);
      known[slot] = 1;
    }
    const auto& c = memo[slot];
    // z'Az counts the pair through both (n,m) and (m,n).
    p.values[p.pattern->slot_nm[k]] += 0.25 * c.a;
    p.values[p.pattern->slot_mn[k]] += 0.25 * c.a;
    constant.add(c.constant);
  }
  p.loss_constant = constant.value();
  return p;
}

BitProblem assemble_bit_problem(const LossSpec& spec, const CodeMatrix& z, const AffinityGraph& g,
                                int bit, const CodeMatrix& h_codes, double mu) {
  const auto row = h_codes.row(bit);
  return assemble_bit_problem(spec, z, g, make_pair_pattern(g), bit, row, mu);
}

EigenResult smallest_eigenpair(std::size_t dim,
                               const std::function<void(std::span<const double>, std::span<double>)>& apply,
                               double norm_bound, double tolerance, int max_iterations,
                               int subspace, std::uint64_t seed) {
  EigenResult res;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::vector<double> v(dim);
  for (auto& x : v) x = gauss(rng);
  const double vn = std::sqrt(dot(v, v));
  for (auto& x : v) x /= vn;
  if (norm_bound <= 0) {
    res.vector = v;
    res.converged = true;
    return res;
  }
  const double breakdown = 1e-12 * norm_bound;
  const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(std::max(subspace, 2)), dim);
  std::vector<std::vector<double>> basis;
  std::vector<double> w(dim), bx(dim);
  while (res.iterations < max_iterations) {
    basis.assign(1, v);
    std::vector<double> alpha, beta;
    for (std::size_t j = 0; j < m; ++j) {
      apply(basis[j], w);
      ++res.iterations;
      const double a = dot(basis[j], w);
      alpha.push_back(a);
      for (std::size_t i = 0; i < dim; ++i) {
        w[i] -= a * basis[j][i];
        if (j > 0) w[i] -= beta[j - 1] * basis[j - 1][i];
      }
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& q : basis) {
          const double c = dot(q, w);
          for (std::size_t i = 0; i < dim; ++i) w[i] -= c * q[i];
        }
      }
      const double bn = std::sqrt(dot(w, w));
      if (j + 1 == m || bn <= breakdown) break;
      // Ritz residual of the lowest pair is bn * |last eigenvector entry|.
      if (j >= 4 && j % 5 == 4) {
        const auto kk = static_cast<Eigen::Index>(alpha.size());
        Eigen::VectorXd diag(kk), off(kk > 1 ? kk - 1 : 1);
        for (Eigen::Index i = 0; i < kk; ++i) diag(i) = alpha[static_cast<std::size_t>(i)];
        for (Eigen::Index i = 0; i + 1 < kk; ++i) off(i) = beta[static_cast<std::size_t>(i)];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ts;
        ts.computeFromTridiagonal(diag, off.head(kk - 1), Eigen::ComputeEigenvectors);
        if (bn * std::abs(ts.eigenvectors()(kk - 1, 0)) <= 0.5 * tolerance * norm_bound) break;
      }
      beta.push_back(bn);
      basis.emplace_back(dim);
      for (std::size_t i = 0; i < dim; ++i) basis.back()[i] = w[i] / bn;
    }
    const auto k = static_cast<Eigen::Index>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      t(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const double theta = es.eigenvalues()(0);
    std::vector<double> x(dim, 0.0);
    for (Eigen::Index j = 0; j < k; ++j) {
      const double s = es.eigenvectors()(j, 0);
      for (std::size_t i = 0; i < dim; ++i) x[i] += s * basis[static_cast<std::size_t>(j)][i];
    }
    const double xn = std::sqrt(dot(x, x));
    for (auto& xi : x) xi /= xn;
    apply(x, bx);
    ++res.iterations;
    double r2 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) r2 += (bx[i] - theta * x[i]) * (bx[i] - theta * x[i]);
    res.value = theta;
    res.vector = x;
    if (std::sqrt(r2) <= tolerance * norm_bound) {
      res.converged = true;
      return res;
    }
    v = std::move(x);
  }
  return res;
}

std::vector<int> spectral_init(const BitProblem& p, const QuadConfig& cfg) {
  const std::size_t n = p.points();
  const auto& pat = *p.pattern;
  const double border_weight = 0.5 * p.mu;
  double bound = border_weight * static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    double s = border_weight;
    for (std::size_t k = pat.row_start[r]; k < pat.row_start[r + 1]; ++k) s += std::abs(p.values[k]);
    bound = std::max(bound, s);
  }
  // alpha = (z, alpha0), B = [[A, -(mu/2) h], [-(mu/2) h', 0]].
  auto apply = [&](std::span<const double> x, std::span<double> out) {
    p.multiply(x.first(n), out.first(n));
    double border = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      out[i] -= border_weight * p.h[i] * x[n];
      border -= border_weight * p.h[i] * x[i];
    }
    out[n] = border;
  };
  const auto eig = smallest_eigenpair(n + 1, apply, bound, cfg.eigen_tolerance,
                                      cfg.eigen_max_iterations, cfg.lanczos_subspace);
  std::vector<int> z(n);
  if (!eig.converged) {
    warn("spectral initialization did not converge; starting from the hash outputs");
    for (std::size_t i = 0; i < n; ++i) z[i] = sign_of(p.h[i]);
    return z;
  }
  const double orient = eig.vector[n] < 0 ? -1.0 : 1.0;
  for (std::size_t i = 0; i < n; ++i) z[i] = sign_of(orient * eig.vector[i]);
  return z;
}

std::vector<double> solve_relaxed_qp(const BitProblem& p, std::span<const double> z0,
                                     const QuadConfig& cfg) {
  const std::size_t n = p.points();
  if (z0.size() != n) throw std::invalid_argument("initial point has wrong length");
  std::vector<double> z(n), g(n), az(n), d(n), ad(n), g_old(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = std::clamp(z0[i], -1.0, 1.0);
  p.multiply(z, az);
  auto value = [&] {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) f += z[i] * az[i] + p.mu * (z[i] - p.h[i]) * (z[i] - p.h[i]);
    return f;
  };
  const std::vector<double> start = z;
  const double f0 = value();
  auto gradient = [&] {
    for (std::size_t i = 0; i < n; ++i) g[i] = 2.0 * az[i] + 2.0 * p.mu * (z[i] - p.h[i]);
  };
  gradient();

  // Projected gradient with a Barzilai-Borwein trial step; the objective is
  // quadratic, so the step along the projected direction is chosen exactly.
  double step = 1.0 / (2.0 * (p.mu + p.coefficient_scale() * 8.0) + 1e-12);
  for (int it = 0; it < cfg.qp_max_iterations; ++it) {
    double pg = 0.0;
    for (std::size_t i = 0; i < n; ++i) pg = std::max(pg, std::abs(std::clamp(z[i] - g[i], -1.0, 1.0) - z[i]));
    if (pg <= cfg.qp_tolerance) break;
    double slope = 0.0, dd = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = std::clamp(z[i] - step * g[i], -1.0, 1.0) - z[i];
      slope += g[i] * d[i];
      dd += d[i] * d[i];
    }
    if (!(slope < 0.0)) {
      // BB step too small to move; fall back to the unit projected step.
      slope = dd = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d[i] = std::clamp(z[i] - g[i], -1.0, 1.0) - z[i];
        slope += g[i] * d[i];
        dd += d[i] * d[i];
      }
      if (!(slope < 0.0)) break;
    }
    p.multiply(d, ad);
    double curv = p.mu * dd;
    for (std::size_t i = 0; i < n; ++i) curv += d[i] * ad[i];
    // f(z + s d) = f(z) + s slope + s^2 curv on s in [0, 1]
    const double s = curv > 0.0 ? std::min(1.0, -slope / (2.0 * curv)) : 1.0;
    g_old = g;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = std::clamp(z[i] + s * d[i], -1.0, 1.0);
      az[i] += s * ad[i];
    }
    if ((it + 1) % 50 == 0) p.multiply(z, az);  // drop accumulated rounding
    gradient();
    double ss = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double si = s * d[i];
      ss += si * si;
      sy += si * (g[i] - g_old[i]);
    }
    step = sy > 0 ? std::clamp(ss / sy, 1e-12, 1e6) : 1e6;
  }
  p.multiply(z, az);
  if (value() > f0) return start;
  return z;
}

QuadStepResult zstep_quad(const LossSpec& spec, const CodeMatrix& z, const AffinityGraph& g,
                          const CodeMatrix& h_codes, double mu, const QuadConfig& cfg,
                          const ZStepObserver& observer, std::shared_ptr<const PairPattern> pattern) {
  if (z.bits() != h_codes.bits() || z.points() != h_codes.points())
    throw std::invalid_argument("codes and hash outputs differ in shape");
  QuadStepResult res{z, std::vector<bool>(static_cast<std::size_t>(z.bits()), false)};
  if (!pattern) pattern = make_pair_pattern(g);
  for (int bit = 0; bit < z.bits(); ++bit) {
    const auto h_row = h_codes.row(bit);
    const auto p = assemble_bit_problem(spec, res.z, g, pattern, bit, h_row, mu);
    const auto current = res.z.row(bit);
    const auto init = spectral_init(p, cfg);
    const std::vector<double> start(init.begin(), init.end());
    const auto relaxed = solve_relaxed_qp(p, start, cfg);
    std::vector<int> candidate(relaxed.size());
    for (std::size_t i = 0; i < relaxed.size(); ++i) candidate[i] = sign_of(relaxed[i]);
    const double f_cur = p.objective(std::span<const int>(current));
    const double f_new = p.objective(std::span<const int>(candidate));
    if (f_new < f_cur - 1e-12 * (1.0 + std::abs(f_cur))) {
      res.z.set_row(bit, candidate);
      res.accepted[static_cast<std::size_t>(bit)] = true;
    }
    if (observer) observer(res.z);
  }
  return res;
}

Blocks blocks_from_labels(std::span<const int> labels) {
  std::map<int, std::vector<std::uint32_t>> by;
  for (std::size_t n = 0; n < labels.size(); ++n) by[labels[n]].push_back(static_cast<std::uint32_t>(n));
  Blocks b;
  for (auto& [label, members] : by) {
    b.labels.push_back(label);
    b.members.push_back(std::move(members));
  }
  return b;
}

Blocks blocks_from_affinities(const AffinityGraph& g) {
  std::vector<std::size_t> parent(g.points);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& p : g.pairs) {
    if (p.y <= 0) continue;
    const auto a = find(p.n), b = find(p.m);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::map<std::size_t, std::vector<std::uint32_t>> comps;  // keyed by smallest member
  for (std::size_t n = 0; n < g.points; ++n) comps[find(n)].push_back(static_cast<std::uint32_t>(n));
  Blocks b;
  int id = 0;
  for (auto& [root, members] : comps) {
    b.labels.push_back(id++);
    b.members.push_back(std::move(members));
  }
  return b;
}

Blocks singleton_blocks(std::size_t points) {
  Blocks b;
  for (std::size_t n = 0; n < points; ++n) {
    b.members.push_back({static_cast<std::uint32_t>(n)});
    b.labels.push_back(static_cast<int>(n));
  }
  return b;
}

Blocks enforce_submodular(const Blocks& blocks, const BitProblem& p) {
  const double tol = 1e-12 * std::max(1.0, p.coefficient_scale());
  const auto& pat = *p.pattern;
  std::vector<int> in_block(p.points(), -1);
  Blocks out;
  std::vector<std::uint32_t> evicted;
  for (std::size_t bi = 0; bi < blocks.members.size(); ++bi) {
    const auto& members = blocks.members[bi];
    const int tag = static_cast<int>(bi);
    std::vector<std::uint32_t> kept;
    // Greedy in ascending order: a point joins only if it has no positive
    // coefficient with the points already kept.
    for (auto n : members) {
      bool ok = true;
      for (std::size_t k = pat.row_start[n]; k < pat.row_start[n + 1] && ok; ++k)
        ok = !(in_block[pat.cols[k]] == tag && p.values[k] > tol);
      if (ok) {
        kept.push_back(n);
        in_block[n] = tag;
      } else {
        evicted.push_back(n);
      }
    }
    for (auto n : kept) in_block[n] = -1;
    out.members.push_back(std::move(kept));
    out.labels.push_back(bi < blocks.labels.size() ? blocks.labels[bi] : tag);
  }
  if (!evicted.empty()) {
    warn("non-submodular pairs inside blocks; moved " + std::to_string(evicted.size()) +
         " points to singleton blocks");
    for (auto m : evicted) {
      out.members.push_back({m});
      out.labels.push_back(-1);
    }
  }
  return out;
}

namespace {

struct BlockCut {
  std::vector<int> bits;
  double energy = 0.0;          // block energy of `bits`
  double current_energy = 0.0;  // block energy of the incoming bits
};

/// Block energy  sum_{n<m in B} w z_n z_m + sum_n u_n z_n  with
/// w = 2 A(n,m) and u_n = 2 sum_{m not in B} A(n,m) z_m - 2 mu h_n; it
/// differs from the bit objective by a term that does not depend on z_B.
double submodular_tolerance(const BitProblem& p) { return 1e-12 * std::max(1.0, p.coefficient_scale()); }

BlockCut cut_block(const BitProblem& p, std::span<const std::uint32_t> block, std::span<const int> z,
                   std::vector<int>& local, double tol) {
  const auto& pat = *p.pattern;
  const std::size_t nb = block.size();
  for (std::size_t j = 0; j < nb; ++j) local[block[j]] = static_cast<int>(j);

  struct Pairwise {
    std::size_t j, k;
    double w;
  };
  std::vector<double> u(nb);
  std::vector<Pairwise> pairs;
  for (std::size_t j = 0; j < nb; ++j) {
    const auto n = block[j];
    double uj = -2.0 * p.mu * p.h[n];
    for (std::size_t s = pat.row_start[n]; s < pat.row_start[n + 1]; ++s) {
      const auto m = pat.cols[s];
      const int lm = local[m];
      if (lm < 0) {
        uj += 2.0 * p.values[s] * z[m];
      } else if (m > n && p.values[s] != 0.0) {
        const double w = 2.0 * p.values[s];
        if (w > 2.0 * tol) {
          for (auto q : block) local[q] = -1;
          throw std::logic_error("non-submodular coefficient between points " + std::to_string(n) +
                                 " and " + std::to_string(m));
        }
        pairs.push_back({j, static_cast<std::size_t>(lm), std::min(w, 0.0)});
      }
    }
    u[j] = uj;
  }

  auto energy = [&](const std::vector<int>& zb) {
    double e = 0.0;
    for (std::size_t j = 0; j < nb; ++j) e += u[j] * zb[j];
    for (const auto& pw : pairs) e += pw.w * zb[pw.j] * zb[pw.k];
    return e;
  };

  // x = (z + 1) / 2 with x = 1 on the source side:
  //   w z_j z_k = 2w x_j - 2w x_k - 4w x_j (1 - x_k) + w,   u z = 2u x - u.
  std::vector<double> theta(nb);
  for (std::size_t j = 0; j < nb; ++j) theta[j] = 2.0 * u[j];
  MaxFlow flow(nb);
  flow.reserve(pairs.size() + 2 * nb);
  for (const auto& pw : pairs) {
    theta[pw.j] += 2.0 * pw.w;
    theta[pw.k] -= 2.0 * pw.w;
    flow.add_edge(pw.j, pw.k, -4.0 * pw.w);
  }
  for (std::size_t j = 0; j < nb; ++j) {
    if (theta[j] > 0)
      flow.add_terminal(j, 0.0, theta[j]);
    else if (theta[j] < 0)
      flow.add_terminal(j, -theta[j], 0.0);
  }
  flow.solve();

  BlockCut out;
  out.bits.resize(nb);
  std::vector<int> current(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    out.bits[j] = flow.source_side(j) ? 1 : -1;
    current[j] = z[block[j]];
  }
  out.energy = energy(out.bits);
  out.current_energy = energy(current);
  for (auto q : block) local[q] = -1;
  return out;
}

}  // namespace

std::vector<int> min_cut_block(const BitProblem& p, std::span<const std::uint32_t> block,
                               std::span<const int> z) {
  if (z.size() != p.points()) throw std::invalid_argument("code row has wrong length");
  std::vector<int> local(p.points(), -1);
  return cut_block(p, block, z, local, submodular_tolerance(p)).bits;
}

CodeMatrix zstep_cut(const LossSpec& spec, const CodeMatrix& z, const AffinityGraph& g,
                     const CodeMatrix& h_codes, double mu, const Blocks& blocks, int sweeps,
                     const ZStepObserver& observer, std::shared_ptr<const PairPattern> pattern) {
  if (z.bits() != h_codes.bits() || z.points() != h_codes.points())
    throw std::invalid_argument("codes and hash outputs differ in shape");
  CodeMatrix out = z;
  if (sweeps <= 0) return out;
  {
    std::vector<char> covered(z.points(), 0);
    for (const auto& b : blocks.members)
      for (auto n : b) {
        if (n >= z.points()) throw std::out_of_range("block member out of range");
        covered[n] = 1;
      }
    if (std::find(covered.begin(), covered.end(), 0) != covered.end())
      throw std::invalid_argument("blocks do not cover every point");
  }
  if (!pattern) pattern = make_pair_pattern(g);
  std::vector<int> local(z.points(), -1);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    bool changed = false;
    for (int bit = 0; bit < out.bits(); ++bit) {
      const auto h_row = h_codes.row(bit);
      const auto p = assemble_bit_problem(spec, out, g, pattern, bit, h_row, mu);
      const auto safe = enforce_submodular(blocks, p);
      auto row = out.row(bit);
      const double tol = submodular_tolerance(p);
      for (const auto& block : safe.members) {
        if (block.empty()) continue;
        const auto cut = cut_block(p, block, row, local, tol);
        if (cut.energy < cut.current_energy - 1e-10 * (1.0 + std::abs(cut.current_energy))) {
          for (std::size_t j = 0; j < block.size(); ++j) {
            row[block[j]] = cut.bits[j];
            out.set(bit, block[j], cut.bits[j]);
          }
          changed = true;
          if (observer) observer(out);
        }
      }
    }
    if (!changed) break;
  }
  return out;
}

}  // namespace machash
