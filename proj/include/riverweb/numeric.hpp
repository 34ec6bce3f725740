#pragma once

#include <cmath>
#include <span>

namespace riverweb {

/// Neumaier-compensated sum; the result does not depend on how the input was produced.
inline double compensated_sum(std::span<const double> xs) {
  double sum = 0.0;
  double comp = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    comp += (std::abs(sum) >= std::abs(x)) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace riverweb
