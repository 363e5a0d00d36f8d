#include "machash/codes.hpp"

#include <stdexcept>
#include <string>

namespace machash {

CodeMatrix::CodeMatrix(int bits, std::size_t points) : bits_(bits) {
  if (bits < 1 || bits > kMaxBits)
    throw std::invalid_argument("code length must be in [1, 64], got " + std::to_string(bits));
  words_.assign(points, mask());
}

CodeMatrix CodeMatrix::from_rows(const std::vector<std::vector<int>>& rows) {
  if (rows.empty()) throw std::invalid_argument("code matrix needs at least one row");
  CodeMatrix z(static_cast<int>(rows.size()), rows.front().size());
  for (int i = 0; i < z.bits(); ++i) {
    if (rows[i].size() != z.points()) throw std::invalid_argument("ragged code rows");
    z.set_row(i, rows[i]);
  }
  return z;
}

void CodeMatrix::set(int bit, std::size_t n, int value) {
  if (value != 1 && value != -1)
    throw std::invalid_argument("code entries must be +1 or -1");
  const std::uint64_t m = std::uint64_t{1} << bit;
  words_[n] = value > 0 ? (words_[n] | m) : (words_[n] & ~m);
}

std::vector<int> CodeMatrix::column(std::size_t n) const {
  std::vector<int> out(bits_);
  for (int i = 0; i < bits_; ++i) out[i] = at(i, n);
  return out;
}

std::vector<int> CodeMatrix::row(int bit) const {
  std::vector<int> out(points());
  for (std::size_t n = 0; n < points(); ++n) out[n] = at(bit, n);
  return out;
}

void CodeMatrix::set_row(int bit, std::span<const int> values) {
  if (values.size() != points()) throw std::invalid_argument("row length mismatch");
  for (std::size_t n = 0; n < values.size(); ++n) set(bit, n, values[n]);
}

std::size_t hamming_total(const CodeMatrix& a, const CodeMatrix& b) {
  if (a.bits() != b.bits() || a.points() != b.points())
    throw std::invalid_argument("code matrices differ in shape");
  std::size_t total = 0;
  for (std::size_t n = 0; n < a.points(); ++n) total += hamming(a.word(n), b.word(n));
  return total;
}

}  // namespace machash
