#include "homlab/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "homlab/errors.hpp"

namespace homlab {

namespace {

double power_mean_root(std::span<const double> powers, double p) {
  return std::pow(std::max(mean(powers), 0.0), 1.0 / p);
}

}  // namespace

double mean(std::span<const double> v) {
  if (v.empty()) throw ArgumentError("mean of an empty list");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / static_cast<double>(v.size() - 1);
}

double standard_error_of_mean(std::span<const double> v) {
  return v.size() < 2 ? 0.0 : std::sqrt(variance(v) / static_cast<double>(v.size()));
}

MomentEstimate moment(std::span<const double> values, double p, std::uint64_t bootstrap_seed) {
  if (values.empty()) throw ArgumentError("moment of an empty list");
  if (!(p >= 1.0)) throw ArgumentError("moment order must be >= 1");
  std::vector<double> powers(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) powers[i] = std::pow(std::abs(values[i]), p);
  return moment_from_powers(powers, p, bootstrap_seed);
}

MomentEstimate moment_from_powers(std::span<const double> per_sample_powers, double p, std::uint64_t bootstrap_seed) {
  if (per_sample_powers.empty()) throw ArgumentError("moment of an empty list");
  if (!(p >= 1.0)) throw ArgumentError("moment order must be >= 1");
  MomentEstimate est;
  est.p = p;
  est.samples = per_sample_powers.size();
  est.value = power_mean_root(per_sample_powers, p);
  est.standard_error = bootstrap_standard_error(
      per_sample_powers, [p](std::span<const double> draw) { return power_mean_root(draw, p); }, bootstrap_seed);
  return est;
}

RateFit fit_linear(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw ArgumentError("rate fit needs at least 3 points");
  const double n = static_cast<double>(points.size());
  double sx = 0, sy = 0;
  for (const auto& [x, y] : points) {
    sx += x;
    sy += y;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (!(sxx > 0.0)) throw ArgumentError("rate fit needs distinct scales");
  RateFit fit;
  fit.points = points.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (const auto& [x, y] : points) {
    const double r = y - (fit.intercept + fit.slope * x);
    sse += r * r;
  }
  // A constant series is fitted exactly.
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
  fit.residual_standard_error = std::sqrt(sse / (n - 2.0));
  fit.slope_standard_error = fit.residual_standard_error / std::sqrt(sxx);
  fit.scale_min = points.front().first;
  fit.scale_max = points.front().first;
  for (const auto& pt : points) {
    fit.scale_min = std::min(fit.scale_min, pt.first);
    fit.scale_max = std::max(fit.scale_max, pt.first);
  }
  return fit;
}

RateFit fit_rate(std::span<const std::pair<double, double>> points) {
  std::vector<std::pair<double, double>> logs;
  logs.reserve(points.size());
  for (const auto& [s, v] : points) {
    if (!(s > 0.0) || !(v > 0.0)) throw ArgumentError("rate fit needs positive scales and values");
    logs.emplace_back(std::log(s), std::log(v));
  }
  RateFit fit = fit_linear(logs);
  const auto [lo, hi] = std::minmax_element(points.begin(), points.end());
  fit.scale_min = lo->first;
  fit.scale_max = hi->first;
  return fit;
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("spearman needs two equal lists of >= 2 values");
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = mean(rx), my = mean(ry);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return (sxx > 0 && syy > 0) ? sxy / std::sqrt(sxx * syy) : 0.0;
}

double paired_t_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ArgumentError("paired test needs two equal lists of >= 2 values");
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  const double se = standard_error_of_mean(diff);
  const double m = mean(diff);
  if (se == 0.0) return m > 0 ? INFINITY : (m < 0 ? -INFINITY : 0.0);
  return m / se;
}

double student_t_95(std::size_t dof) {
  static constexpr std::array<double, 30> table{
      6.3138, 2.9200, 2.3534, 2.1318, 2.0150, 1.9432, 1.8946, 1.8595, 1.8331, 1.8125,
      1.7959, 1.7823, 1.7709, 1.7613, 1.7531, 1.7459, 1.7396, 1.7341, 1.7291, 1.7247,
      1.7207, 1.7171, 1.7139, 1.7109, 1.7081, 1.7056, 1.7033, 1.7011, 1.6991, 1.6973};
  if (dof <= table.size()) return table[std::max<std::size_t>(dof, 1) - 1];
  // Cornish-Fisher expansion around the normal quantile.
  const double z = 1.6448536269514722;
  const double v = static_cast<double>(std::max<std::size_t>(dof, 1));
  const double z3 = z * z * z, z5 = z3 * z * z, z7 = z5 * z * z;
  return z + (z3 + z) / (4 * v) + (5 * z5 + 16 * z3 + 3 * z) / (96 * v * v) +
         (3 * z7 + 19 * z5 + 17 * z3 - 15 * z) / (384 * v * v * v);
}

}  // namespace homlab
