#include "dichot/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace dichot::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> dist;
  return boost::math::quantile(dist, p);
}

double student_t_quantile(double p, double df) {
  if (std::isinf(df)) return normal_quantile(p);
  const boost::math::students_t_distribution<double> dist(df);
  return boost::math::quantile(dist, p);
}

double t3_cdf(double x) {
  const double u = x / std::numbers::sqrt3;
  return 0.5 + (u / (1.0 + x * x / 3.0) + std::atan(u)) / std::numbers::pi;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty span");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("variance needs n >= 2");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

double nearest_rank_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty span");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile q outside [0,1]");
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n));
  if (rank == 0) rank = 1;
  rank = std::min(rank, sorted.size());
  return sorted[rank - 1];
}

}  // namespace dichot::stats
