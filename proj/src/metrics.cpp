#include "dlsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dlsim {

double cov(std::span<const double> times) {
  if (times.empty()) throw std::invalid_argument("cov of an empty vector");
  double sum = 0.0;
  for (double t : times) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("finishing times must be finite and >= 0");
    sum += t;
  }
  const double n = static_cast<double>(times.size());
  const double mean = sum / n;
  if (!(mean > 0.0)) throw std::invalid_argument("cov undefined for zero mean");
  double sq = 0.0;
  for (double t : times) sq += (t - mean) * (t - mean);
  return std::sqrt(sq / n) / mean;
}

double percent_error(double t_nat, double t_sim) {
  if (!(t_nat > 0.0) || !std::isfinite(t_nat)) throw std::invalid_argument("native time must be > 0");
  if (!(t_sim >= 0.0) || !std::isfinite(t_sim)) throw std::invalid_argument("simulated time must be >= 0");
  return (1.0 - t_sim / t_nat) * 100.0;
}

double sorted_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Aggregate aggregate(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("aggregate of an empty sample");
  std::vector<double> s(samples.begin(), samples.end());
  for (double v : s)
    if (!std::isfinite(v)) throw std::invalid_argument("aggregate of a non-finite sample");
  std::sort(s.begin(), s.end());
  return {sorted_quantile(s, 0.5), sorted_quantile(s, 0.25), sorted_quantile(s, 0.75), s.front(), s.back()};
}

}  // namespace dlsim
