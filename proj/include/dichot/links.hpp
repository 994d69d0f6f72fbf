#pragma once

#include <cmath>
#include <stdexcept>

namespace dichot {

/// log(p / (1 - p)); defined for p in (0, 1).
inline double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("logit: p must lie strictly inside (0, 1)");
  }
  return std::log(p / (1.0 - p));
}

/// Inverse logit, computed without overflow for large |x|.
inline double expit(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace dichot
