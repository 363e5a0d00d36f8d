#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace machash {

/// Maximum code length; one 64-bit word holds a point's whole code.
inline constexpr int kMaxBits = 64;

/// sign with the library-wide tie rule sign(0) := +1.
inline int sign_of(double v) { return v >= 0.0 ? 1 : -1; }

/**
 * b x N matrix of +-1 entries stored one packed word per column.
 *
 * Bit i of word(n) is set when entry (i, n) is +1. Column n is the code of
 * point n; row i is the i-th bit over all points.
 */
class CodeMatrix {
public:
  CodeMatrix() = default;
  /// All entries +1.
  CodeMatrix(int bits, std::size_t points);

  static CodeMatrix from_rows(const std::vector<std::vector<int>>& rows);

  int bits() const { return bits_; }
  std::size_t points() const { return words_.size(); }

  int at(int bit, std::size_t n) const {
    return (words_[n] >> bit) & 1u ? 1 : -1;
  }
  void set(int bit, std::size_t n, int value);

  std::uint64_t word(std::size_t n) const { return words_[n]; }
  void set_word(std::size_t n, std::uint64_t w) { words_[n] = w & mask(); }
  std::span<const std::uint64_t> words() const { return words_; }

  std::uint64_t mask() const {
    return bits_ == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << bits_) - 1);
  }

  std::vector<int> column(std::size_t n) const;
  std::vector<int> row(int bit) const;
  void set_row(int bit, std::span<const int> values);

  friend bool operator==(const CodeMatrix&, const CodeMatrix&) = default;

private:
  int bits_ = 0;
  std::vector<std::uint64_t> words_;
};

inline int hamming(std::uint64_t a, std::uint64_t b) { return std::popcount(a ^ b); }

/// Inner product of two +-1 codes packed in words.
inline int code_dot(std::uint64_t a, std::uint64_t b, int bits) {
  return bits - 2 * hamming(a, b);
}

/// Total Hamming distance between corresponding columns.
std::size_t hamming_total(const CodeMatrix& a, const CodeMatrix& b);

}  // namespace machash
