#pragma once

#include <cmath>
#include <stdexcept>

namespace sqzlab {

/// Power-ratio decibels. For quadrature variances 0 dB is the shot-noise limit.
inline double db_from_linear(double v) {
  if (!(v > 0.0)) throw std::domain_error("db_from_linear: value must be > 0");
  return 10.0 * std::log10(v);
}

inline double linear_from_db(double d) { return std::pow(10.0, d / 10.0); }

}  // namespace sqzlab
