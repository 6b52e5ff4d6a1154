#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace homlab {

/// Empirical moment <|X|^p>^{1/p} with a bootstrap standard error.
struct MomentEstimate {
  double p = 2.0;
  double value = 0.0;
  std::size_t samples = 0;
  double standard_error = 0.0;
};

inline constexpr std::size_t kBootstrapResamples = 200;

/// (mean |v|^p)^{1/p}; throws ArgumentError on empty input or p < 1.
MomentEstimate moment(std::span<const double> values, double p, std::uint64_t bootstrap_seed = 0);

/// Bootstrap standard error of `statistic` over resamples of `samples`.
/// The statistic receives the resampled values.
template <class Statistic>
double bootstrap_standard_error(std::span<const double> samples, Statistic&& statistic, std::uint64_t seed,
                                std::size_t resamples = kBootstrapResamples);

/// Moment of pre-averaged per-sample powers: per_sample[s] = mean of |X|^p
/// over the spatial points of sample s; the estimate is (mean_s)^{1/p}.
MomentEstimate moment_from_powers(std::span<const double> per_sample_powers, double p, std::uint64_t bootstrap_seed = 0);

/// Least-squares line through (log scale, log value).
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double residual_standard_error = 0.0;
  /// Standard error of the slope from the regression.
  double slope_standard_error = 0.0;
  double scale_min = 0.0;
  double scale_max = 0.0;
  std::size_t points = 0;
};

/// Requires >= 3 points with positive scales and values.
RateFit fit_rate(std::span<const std::pair<double, double>> points);

/// Ordinary least squares y = intercept + slope x with R^2 (no logs).
RateFit fit_linear(std::span<const std::pair<double, double>> points);

double mean(std::span<const double> v);
/// Unbiased sample variance.
double variance(std::span<const double> v);
double standard_error_of_mean(std::span<const double> v);

/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> x, std::span<const double> y);

/// One-sided paired test of mean(a - b) > 0: returns the t statistic.
double paired_t_statistic(std::span<const double> a, std::span<const double> b);

/// Upper 5% quantile of Student's t with `dof` degrees of freedom.
double student_t_95(std::size_t dof);

}  // namespace homlab

#include "homlab/stats_impl.hpp"
