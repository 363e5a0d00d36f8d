#include "machash/loss.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

#include "machash/util.hpp"

namespace machash {

void validate(const LossSpec& spec) {
  if (spec.bits < 1 || spec.bits > kMaxBits)
    throw std::invalid_argument("code length must be in [1, 64]");
  if (spec.kind == LossKind::ee && !(spec.lambda > 0))
    throw std::invalid_argument("EE loss needs lambda > 0");
}

const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::ksh: return "ksh";
    case LossKind::bre: return "bre";
    case LossKind::esplh: return "esplh";
    case LossKind::ee: return "ee";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "ksh") return LossKind::ksh;
  if (name == "bre") return LossKind::bre;
  if (name == "esplh") return LossKind::esplh;
  if (name == "ee") return LossKind::ee;
  throw std::invalid_argument("unknown loss '" + name + "' (expected ksh, bre, esplh or ee)");
}

double pair_loss_from_dot(const LossSpec& spec, double dot, double y, double y_neg) {
  const double b = spec.bits;
  switch (spec.kind) {
    case LossKind::ksh: {
      const double r = dot - b * y;
      return r * r;
    }
    case LossKind::bre: {
      const double r = 2.0 * (b - dot) / b - y;
      return r * r;
    }
    case LossKind::esplh:
      return std::exp(-y * dot / b);
    case LossKind::ee: {
      const double dist2 = 2.0 * (b - dot);
      return y * dist2 + spec.lambda * y_neg * std::exp(-dist2);
    }
  }
  return 0.0;
}

double pair_loss(const LossSpec& spec, std::span<const int> zn, std::span<const int> zm,
                 double y, double y_neg) {
  if (zn.size() != static_cast<std::size_t>(spec.bits) || zm.size() != zn.size())
    throw std::invalid_argument("code length mismatch: expected " + std::to_string(spec.bits));
  int dot = 0;
  for (std::size_t i = 0; i < zn.size(); ++i) {
    if ((zn[i] != 1 && zn[i] != -1) || (zm[i] != 1 && zm[i] != -1))
      throw std::invalid_argument("code entry at bit " + std::to_string(i) + " is not +-1");
    dot += zn[i] * zm[i];
  }
  return pair_loss_from_dot(spec, dot, y, y_neg);
}

double total_loss(const LossSpec& spec, const CodeMatrix& z, const AffinityGraph& g) {
  if (z.points() != g.points)
    throw std::invalid_argument("code matrix has " + std::to_string(z.points()) +
                                " columns but the graph has " + std::to_string(g.points) + " points");
  CompensatedSum sum;
  for (const auto& p : g.pairs) {
    if (p.n >= z.points() || p.m >= z.points()) throw std::out_of_range("pair index out of range");
    sum.add(pair_loss_from_dot(spec, code_dot(z.word(p.n), z.word(p.m), z.bits()), p.y, p.y_neg));
  }
  return sum.value();
}

double penalty_objective(const LossSpec& spec, const CodeMatrix& z, const AffinityGraph& g,
                         const CodeMatrix& h_codes, double mu) {
  if (mu < 0) throw std::invalid_argument("penalty weight mu must be >= 0");
  const double loss = total_loss(spec, z, g);
  if (mu == 0) return loss;
  return loss + mu * 4.0 * static_cast<double>(hamming_total(z, h_codes));
}

SurrogateCoeff surrogate_from_values(double l11, double l1m1) {
  return {l11 - l1m1, 0.5 * (l11 + l1m1)};
}

SurrogateCoeff bit_surrogate_from_context(const LossSpec& spec, int context_dot,
                                          const AffinityPair& p) {
  const double l11 = pair_loss_from_dot(spec, context_dot + 1, p.y, p.y_neg);
  const double l1m1 = pair_loss_from_dot(spec, context_dot - 1, p.y, p.y_neg);
  return surrogate_from_values(l11, l1m1);
}

SurrogateCoeff bit_surrogate(const LossSpec& spec, const CodeMatrix& z, int bit,
                             const AffinityPair& p) {
  if (bit < 0 || bit >= z.bits()) throw std::out_of_range("bit index out of range");
  auto zn = z.column(p.n);
  auto zm = z.column(p.m);
  auto eval = [&](int s, int t) {
    zn[bit] = s;
    zm[bit] = t;
    return pair_loss(spec, zn, zm, p.y, p.y_neg);
  };
  const double l11 = eval(1, 1);
  const double lm1m1 = eval(-1, -1);
  const double l1m1 = eval(1, -1);
  const double lm11 = eval(-1, 1);
  if (l11 != lm1m1 || l1m1 != lm11)
    throw std::logic_error("loss is not symmetric in the free bit; no binary-quadratic surrogate");
  return surrogate_from_values(l11, l1m1);
}

}  // namespace machash
