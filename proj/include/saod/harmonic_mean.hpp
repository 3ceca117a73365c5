#pragma once

#include <initializer_list>

namespace saod {

/// n / sum(1/x_i), defined as 0 as soon as any argument is 0.
inline double harmonic_mean(std::initializer_list<double> values) {
  if (values.size() == 0) return 0.0;
  double inverse_sum = 0.0;
  for (double v : values) {
    if (v <= 0.0) return 0.0;
    inverse_sum += 1.0 / v;
  }
  return static_cast<double>(values.size()) / inverse_sum;
}

}  // namespace saod
