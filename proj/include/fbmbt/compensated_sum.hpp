#pragma once

#include <cmath>

namespace fbmbt {

/// Neumaier (improved Kahan) running sum. With `compensated == false` it
/// degrades to a plain left-to-right sum.
class CompensatedSum {
 public:
  explicit CompensatedSum(bool compensated = true) noexcept : compensated_(compensated) {}

  void add(double x) noexcept {
    if (!compensated_) {
      sum_ += x;
      return;
    }
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }

  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
  bool compensated_;
};

/// Sums longer than this use compensated accumulation.
inline constexpr long long kCompensationThreshold = 1LL << 16;

}  // namespace fbmbt
