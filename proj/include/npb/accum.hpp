#pragma once

#include <cmath>

namespace npb {

// Neumaier compensated accumulator. Serial and chunked reductions built on
// top of it agree to ~1 ulp, which keeps the weighted statistics and
// likelihood sums reproducible regardless of traversal order.
template <typename Scalar = double>
class CompensatedSum {
 public:
  CompensatedSum() = default;

  void add(Scalar x) {
    const Scalar t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  void add(const CompensatedSum& other) {
    add(other.sum_);
    comp_ += other.comp_;
  }

  Scalar value() const { return sum_ + comp_; }

 private:
  Scalar sum_ = Scalar(0);
  Scalar comp_ = Scalar(0);
};

template <typename Iterable>
double compensated_total(const Iterable& xs) {
  CompensatedSum<double> acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

}  // namespace npb
