#pragma once

#include <span>
#include <vector>

namespace pcaising::stats {

struct Summary {
  int n = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double stderr_mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
};

Summary summarize(std::span<const double> values);

/// Linear-interpolation quantile of already sorted values, p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(long long successes, long long trials, double z);

struct LinearFit {
  int n = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = intercept + slope x.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

/// Fit of log y against log x; the slope is the power-law exponent.
LinearFit loglog_fit(std::span<const double> x, std::span<const double> y);

}  // namespace pcaising::stats
