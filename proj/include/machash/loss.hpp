#pragma once

#include <span>

#include "machash/affinity.hpp"
#include "machash/codes.hpp"

namespace machash {

enum class LossKind { ksh, bre, esplh, ee };

struct LossSpec {
  LossKind kind = LossKind::ksh;
  int bits = 16;
  double lambda = 1.0;  // EE repulsion weight
};

void validate(const LossSpec& spec);

const char* to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& name);

/**
 * Per-pair loss from the code inner product.
 *
 * Every supported loss depends on two codes only through z_n'z_m:
 *   KSH    (dot - b y)^2
 *   BRE    ((1/b)|z_n - z_m|^2 - y)^2,  |z_n - z_m|^2 = 2(b - dot)
 *   eSPLH  exp(-(1/b) y dot)
 *   EE     y+ |z_n - z_m|^2 + lambda y- exp(-|z_n - z_m|^2)
 */
double pair_loss_from_dot(const LossSpec& spec, double dot, double y, double y_neg = 0.0);

/// Loss of two explicit code columns. Throws on length mismatch or entries
/// other than +-1.
double pair_loss(const LossSpec& spec, std::span<const int> zn, std::span<const int> zm,
                 double y, double y_neg = 0.0);

/// E(Z): sum of pair losses over the stored pairs, compensated, in list order.
double total_loss(const LossSpec& spec, const CodeMatrix& z, const AffinityGraph& g);

/// L_P = E(Z) + mu * sum_n |z_n - h_n|^2 (the squared norm is 4 x Hamming).
double penalty_objective(const LossSpec& spec, const CodeMatrix& z, const AffinityGraph& g,
                         const CodeMatrix& h_codes, double mu);

/// Binary-quadratic form of one pair's loss restricted to one bit:
/// l(s, t) = 0.5 * s * t * a + constant for s, t in {-1, +1}.
struct SurrogateCoeff {
  double a = 0.0;
  double constant = 0.0;
};

/// From the loss values at equal bits (l11) and opposite bits (l1m1).
SurrogateCoeff surrogate_from_values(double l11, double l1m1);

/// Surrogate for bit `bit` of pair `p`, all other bits held at their values
/// in `z`. Asserts l(1,1) == l(-1,-1) and l(1,-1) == l(-1,1).
SurrogateCoeff bit_surrogate(const LossSpec& spec, const CodeMatrix& z, int bit,
                             const AffinityPair& p);

/// Same as bit_surrogate given the inner product of the other bits.
SurrogateCoeff bit_surrogate_from_context(const LossSpec& spec, int context_dot,
                                          const AffinityPair& p);

}  // namespace machash
