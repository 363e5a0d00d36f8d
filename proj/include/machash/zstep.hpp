#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "machash/affinity.hpp"
#include "machash/codes.hpp"
#include "machash/loss.hpp"

namespace machash {

/// Symmetric sparsity pattern of an affinity graph in CSR form, plus the
/// two slots every stored pair writes to. Shared by all bits.
struct PairPattern {
  std::vector<std::size_t> row_start;
  std::vector<std::uint32_t> cols;
  std::vector<std::size_t> slot_nm;  // per stored pair
  std::vector<std::size_t> slot_mn;

  std::size_t points() const { return row_start.empty() ? 0 : row_start.size() - 1; }
};

std::shared_ptr<const PairPattern> make_pair_pattern(const AffinityGraph& g);

/**
 * Single-bit subproblem  min_z  z'Az + mu |z - h|^2  over z in {-1,+1}^N.
 *
 * A is symmetric with zero diagonal; z'Az + loss_constant equals the sum of
 * the stored pairs' losses with every bit but this one held fixed.
 */
struct BitProblem {
  std::shared_ptr<const PairPattern> pattern;
  std::vector<double> values;  // aligned with pattern->cols
  std::vector<double> h;       // +-1
  double mu = 0.0;
  double loss_constant = 0.0;

  std::size_t points() const { return h.size(); }
  /// out = A x
  void multiply(std::span<const double> x, std::span<double> out) const;
  /// z'Az + mu |z - h|^2 for real z.
  double objective(std::span<const double> z) const;
  double objective(std::span<const int> z) const;
  /// Largest |A| entry, for tolerance scaling.
  double coefficient_scale() const;
  /// A(n, m) or 0.
  double at(std::size_t n, std::size_t m) const;
};

BitProblem assemble_bit_problem(const LossSpec& spec, const CodeMatrix& z, const AffinityGraph& g,
                                int bit, const CodeMatrix& h_codes, double mu);
BitProblem assemble_bit_problem(const LossSpec& spec, const CodeMatrix& z, const AffinityGraph& g,
                                std::shared_ptr<const PairPattern> pattern, int bit,
                                std::span<const int> h_row, double mu);

struct QuadConfig {
  double eigen_tolerance = 1e-6;
  int eigen_max_iterations = 2000;
  int lanczos_subspace = 40;
  double qp_tolerance = 1e-5;
  int qp_max_iterations = 500;
};

/// Smallest eigenvector of the bordered matrix [[A, -(mu/2) h], [-(mu/2) h', 0]],
/// oriented so its last entry is >= 0, truncated to its first N entries
/// and binarized. Falls back to h (with a warning) if the eigensolver does
/// not converge.
std::vector<int> spectral_init(const BitProblem& p, const QuadConfig& cfg = {});

struct EigenResult {
  double value = 0.0;
  std::vector<double> vector;
  bool converged = false;
  int iterations = 0;
};

/// Smallest eigenpair of a symmetric operator by restarted Lanczos with
/// full reorthogonalization.
EigenResult smallest_eigenpair(std::size_t dim,
                               const std::function<void(std::span<const double>, std::span<double>)>& apply,
                               double norm_bound, double tolerance, int max_iterations,
                               int subspace, std::uint64_t seed = 7);

/// Projected gradient on z'Az + mu |z - h|^2 over [-1, 1]^N: a
/// Barzilai-Borwein trial step, projected, then an exact line search along
/// the projected direction. The result never has a higher objective than
/// `z0`.
std::vector<double> solve_relaxed_qp(const BitProblem& p, std::span<const double> z0,
                                     const QuadConfig& cfg = {});

struct QuadStepResult {
  CodeMatrix z;
  std::vector<bool> accepted;  // per bit: new row taken
};

/// Called after every row or block update with the current codes.
using ZStepObserver = std::function<void(const CodeMatrix&)>;

/// One sweep over the bits: assemble, spectral init, relaxed QP, binarize;
/// a bit row is replaced only when that strictly lowers the bit objective.
/// `pattern` may be passed to reuse a prebuilt pattern of `g`.
QuadStepResult zstep_quad(const LossSpec& spec, const CodeMatrix& z, const AffinityGraph& g,
                          const CodeMatrix& h_codes, double mu, const QuadConfig& cfg = {},
                          const ZStepObserver& observer = {},
                          std::shared_ptr<const PairPattern> pattern = nullptr);

struct Blocks {
  std::vector<std::vector<std::uint32_t>> members;  // each sorted ascending
  std::vector<int> labels;
};

/// One block per class, label-ascending.
Blocks blocks_from_labels(std::span<const int> labels);
/// Connected components of the positive (y > 0) pairs, ordered by smallest
/// member.
Blocks blocks_from_affinities(const AffinityGraph& g);
Blocks singleton_blocks(std::size_t points);

/// Moves points out of their block into singletons until every within-block
/// coefficient of `p` is <= 0 (logs a warning when it has to).
Blocks enforce_submodular(const Blocks& blocks, const BitProblem& p);

/// Exact minimizer of the bit objective over the block's bits, the rest of
/// `z` held fixed, by s-t min-cut (ties resolve towards +1). Throws
/// std::logic_error on a positive within-block coefficient.
std::vector<int> min_cut_block(const BitProblem& p, std::span<const std::uint32_t> block,
                               std::span<const int> z);

/// `sweeps` passes over bits and blocks (stopping early when a pass changes
/// nothing). The penalized objective never increases across a block update.
CodeMatrix zstep_cut(const LossSpec& spec, const CodeMatrix& z, const AffinityGraph& g,
                     const CodeMatrix& h_codes, double mu, const Blocks& blocks, int sweeps,
                     const ZStepObserver& observer = {},
                     std::shared_ptr<const PairPattern> pattern = nullptr);

}  // namespace machash
