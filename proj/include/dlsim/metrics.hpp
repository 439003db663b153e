#pragma once

// Load-imbalance and verification statistics.

#include <span>

namespace dlsim {

/// Coefficient of variation with the population standard deviation, so that
/// 0 <= cov <= sqrt(P - 1) for P finishing times.
double cov(std::span<const double> times);

/// Signed (1 - t_sim / t_nat) * 100. Positive when the simulation
/// underestimates the native time.
double percent_error(double t_nat, double t_sim);

/// Box-plot summary. Quartiles interpolate linearly between closest ranks
/// (position (n - 1) * p in the sorted samples).
struct Aggregate {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;

  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

Aggregate aggregate(std::span<const double> samples);

/// Linear-interpolation quantile of already sorted samples, p in [0, 1].
double sorted_quantile(std::span<const double> sorted, double p);

}  // namespace dlsim
