#pragma once

#include <cmath>
#include <random>
#include <vector>

namespace homlab {

template <class Statistic>
double bootstrap_standard_error(std::span<const double> samples, Statistic&& statistic, std::uint64_t seed,
                                std::size_t resamples) {
  const std::size_t n = samples.size();
  if (n < 2) return 0.0;
  std::mt19937_64 rng(seed ^ 0x5bd1e995u);
  std::vector<double> draw(n);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t b = 0; b < resamples; ++b) {
    for (std::size_t i = 0; i < n; ++i) draw[i] = samples[static_cast<std::size_t>(rng() % n)];
    const double v = statistic(std::span<const double>(draw));
    s1 += v;
    s2 += v * v;
  }
  const double m = s1 / static_cast<double>(resamples);
  const double var = s2 / static_cast<double>(resamples) - m * m;
  return var > 0.0 ? std::sqrt(var * static_cast<double>(resamples) / static_cast<double>(resamples - 1)) : 0.0;
}

}  // namespace homlab
