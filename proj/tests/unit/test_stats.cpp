#include <doctest.h>

#include <cmath>
#include <random>

#include "homlab/errors.hpp"
#include "homlab/stats.hpp"

using namespace homlab;

TEST_CASE("moments") {
  const std::vector<double> v{3.0, -4.0};
  CHECK(moment(v, 2.0).value == doctest::Approx(std::sqrt(12.5)));
  CHECK(moment(v, 1.0).value == doctest::Approx(3.5));
  const std::vector<double> c(10, -2.0);
  const auto m = moment(c, 3.0);
  CHECK(m.value == doctest::Approx(2.0));
  CHECK(m.standard_error == doctest::Approx(0.0));
  CHECK(m.samples == 10);
  CHECK_THROWS_AS(moment(std::vector<double>{}, 2.0), ArgumentError);
  CHECK_THROWS_AS(moment(v, 0.5), ArgumentError);
}

TEST_CASE("bootstrap standard error scales like N^{-1/2}") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> big(256);
  for (double& x : big) x = g(rng);
  const std::vector<double> half(big.begin(), big.begin() + 128);
  const double se_half = moment(half, 2.0, 5).standard_error;
  const double se_big = moment(big, 2.0, 5).standard_error;
  const double ratio = se_half / se_big;
  CHECK(ratio >= 1.25);
  CHECK(ratio <= 1.60);
}

TEST_CASE("bootstrap is reproducible for a fixed seed") {
  const std::vector<double> v{1.0, 2.0, 5.0, 7.0, 11.0};
  CHECK(moment(v, 2.0, 3).standard_error == moment(v, 2.0, 3).standard_error);
}

TEST_CASE("power-law fits") {
  std::vector<std::pair<double, double>> pts;
  for (double s : {2.0, 4.0, 8.0, 16.0}) pts.emplace_back(s, 3.0 * std::pow(s, -0.5));
  const auto fit = fit_rate(pts);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(std::exp(fit.intercept) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.r_squared == doctest::Approx(1.0));
  CHECK(fit.scale_min == 2.0);
  CHECK(fit.scale_max == 16.0);

  pts.clear();
  for (double s : {1.0, 10.0, 100.0}) pts.emplace_back(s, 5.0);
  CHECK(fit_rate(pts).slope == doctest::Approx(0.0).scale(1.0));

  pts.clear();
  for (double s = 16.0; s <= 256.0; s *= 2.0) pts.emplace_back(s, std::log(2.0 + s) / s);
  const double polluted = fit_rate(pts).slope;
  CHECK(polluted > -1.0);
  CHECK(polluted < -0.7);

  CHECK_THROWS_AS(fit_rate(std::vector<std::pair<double, double>>{{1.0, 1.0}, {2.0, 2.0}}), ArgumentError);
  CHECK_THROWS_AS(fit_rate(std::vector<std::pair<double, double>>{{1.0, 1.0}, {2.0, -2.0}, {3.0, 1.0}}),
                  ArgumentError);
}

TEST_CASE("linear fit") {
  std::vector<std::pair<double, double>> pts{{0.0, 1.0}, {1.0, 3.0}, {2.0, 5.0}};
  const auto fit = fit_linear(pts);
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.r_squared == doctest::Approx(1.0));

  pts = {{0.0, 1.0}, {1.0, -1.0}, {2.0, 1.0}, {3.0, -1.0}};
  CHECK(fit_linear(pts).r_squared < 0.3);
}

TEST_CASE("summary statistics") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(mean(v) == 2.5);
  CHECK(variance(v) == doctest::Approx(5.0 / 3.0));
  CHECK(standard_error_of_mean(v) == doctest::Approx(std::sqrt(5.0 / 12.0)));

  const std::vector<double> y{10.0, 20.0, 15.0, 40.0};
  CHECK(spearman(v, y) == doctest::Approx(0.8));
  CHECK(spearman(v, v) == doctest::Approx(1.0));

  const std::vector<double> a{2.0, 3.0, 4.0, 6.0}, b{1.0, 2.0, 2.0, 3.0};
  // differences 1,1,2,3: mean 1.75, sd 0.9574
  CHECK(paired_t_statistic(a, b) == doctest::Approx(1.75 / (0.957427 / 2.0)).epsilon(1e-5));

  CHECK(student_t_95(1) == doctest::Approx(6.314).epsilon(0.05));
  CHECK(student_t_95(10) == doctest::Approx(1.812).epsilon(0.005));
  CHECK(student_t_95(100) == doctest::Approx(1.660).epsilon(0.002));
}
