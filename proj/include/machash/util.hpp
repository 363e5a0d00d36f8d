#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace machash {

/// Warnings go to std::clog unless silenced (tests silence them).
void set_warnings_enabled(bool enabled);
void warn(const std::string& message);

std::uint64_t fnv1a(std::string_view bytes);
std::uint64_t splitmix64(std::uint64_t x);

/// Named-purpose subseed: adding a new consumer does not perturb others.
inline std::uint64_t subseed(std::uint64_t master, std::string_view purpose) {
  return splitmix64(master ^ fnv1a(purpose));
}

/// Neumaier compensated accumulator.
class CompensatedSum {
public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace machash
