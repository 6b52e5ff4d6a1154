#include <doctest.h>

#include <cmath>
#include <random>

#include "homlab/corrector.hpp"
#include "homlab/errors.hpp"

using namespace homlab;

namespace {

SolveOptions tight() {
  SolveOptions o;
  o.tolerance = 1e-12;
  return o;
}

}  // namespace

TEST_CASE("one-dimensional tensor is the harmonic mean") {
  const auto ring = DomainGrid::torus(8, 1);
  CoefficientField alt = constant_field(ring, 1.0, 0.25);
  for (std::size_t e = 1; e < alt.values.size(); e += 2) alt.values[e] = 4.0;
  CHECK(compute_correctors(alt, tight()).abar(0, 0) == doctest::Approx(1.6).epsilon(1e-12));

  EnsembleSpec spec;
  spec.dim = 1;
  spec.law = Law::log_uniform;
  const auto big = DomainGrid::torus(200, 1);
  const auto field = sample_field(spec, big, 3);
  double inv = 0.0;
  for (double a : field.values) inv += 1.0 / a;
  const double harmonic = static_cast<double>(field.values.size()) / inv;
  const auto set = compute_correctors(field, tight());
  CHECK(std::abs(set.abar(0, 0) - harmonic) < 1e-10);
  // Flux is constant along the ring.
  for (double q : set.flux[0]) CHECK(std::abs(q - harmonic) < 1e-9);
}

TEST_CASE("constant conductance has zero correctors") {
  const auto t = DomainGrid::torus(8, 3);
  const auto set = compute_correctors(constant_field(t, 2.5, 0.25), tight());
  for (int i = 0; i < 3; ++i) {
    for (double v : set.phi[static_cast<std::size_t>(i)]) CHECK(std::abs(v) < 1e-12);
    for (int j = 0; j < 3; ++j) CHECK(set.abar(i, j) == doctest::Approx(i == j ? 2.5 : 0.0).scale(1.0));
  }
  for (const auto& comps : set.sigma)
    for (const auto& s : comps)
      for (double v : s) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("laminate: harmonic mean across layers, arithmetic along") {
  const auto t = DomainGrid::torus(16, 2);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.25, 4.0);
  std::vector<double> a(16), b(16);
  for (int x = 0; x < 16; ++x) {
    a[static_cast<std::size_t>(x)] = u(rng);
    b[static_cast<std::size_t>(x)] = u(rng);
  }
  CoefficientField field = constant_field(t, 1.0, 0.25);
  for (std::size_t n = 0; n < t.node_count(); ++n) {
    const auto x0 = static_cast<std::size_t>(t.coord(n, 0));
    field.values[t.edge_index(0, n)] = a[x0];
    field.values[t.edge_index(1, n)] = b[x0];
  }
  double inv = 0.0, arith = 0.0;
  for (int x = 0; x < 16; ++x) {
    inv += 1.0 / a[static_cast<std::size_t>(x)];
    arith += b[static_cast<std::size_t>(x)];
  }
  const auto set = compute_correctors(field, tight());
  CHECK(set.abar(0, 0) == doctest::Approx(16.0 / inv).epsilon(1e-10));
  CHECK(set.abar(1, 1) == doctest::Approx(arith / 16.0).epsilon(1e-10));
  CHECK(std::abs(set.abar(0, 1)) < 1e-10);
}

TEST_CASE("random sample tensor is symmetric and elliptic") {
  EnsembleSpec spec;
  spec.dim = 3;
  spec.law = Law::log_uniform;
  const auto t = DomainGrid::torus(8, 3);
  const auto field = sample_field(spec, t, 0);
  const auto set = compute_correctors(field, tight());
  for (int i = 0; i < 3; ++i) {
    CHECK(set.phi_residual[static_cast<std::size_t>(i)] < 1e-10);
    CHECK(set.abar(i, i) > spec.lambda);
    CHECK(set.abar(i, i) < 1.0 / spec.lambda);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(set.abar(i, j) - set.abar(j, i)) < 1e-9);
  }
  for (double r : set.sigma_residual) CHECK(r < 1e-8);

  // abar_ii is the corrector energy density.
  const EdgeField g = gradient(t, set.phi[1]);
  double e = 0.0;
  for (std::size_t n = 0; n < t.node_count(); ++n)
    for (int k = 0; k < 3; ++k) {
      const std::size_t idx = t.edge_index(k, n);
      const double v = g[idx] + (k == 1 ? 1.0 : 0.0);
      e += field.values[idx] * v * v;
    }
  CHECK(e / static_cast<double>(t.node_count()) == doctest::Approx(set.abar(1, 1)).epsilon(1e-9));
}

TEST_CASE("sigma pair indexing") {
  CHECK(sigma_pair_count(1) == 0);
  CHECK(sigma_pair_count(2) == 1);
  CHECK(sigma_pair_count(3) == 3);
  CHECK(sigma_pair_index(0, 1, 3) == 0);
  CHECK(sigma_pair_index(0, 2, 3) == 1);
  CHECK(sigma_pair_index(1, 2, 3) == 2);
  CHECK_THROWS_AS(sigma_pair_index(1, 1, 3), ArgumentError);
}

TEST_CASE("flux corrector matches a dense solve and reproduces the flux") {
  EnsembleSpec spec;
  spec.seed = 31;
  const auto t = DomainGrid::torus(8, 2);
  const auto field = sample_field(spec, t, 0);
  const auto set = compute_correctors(field, tight());
  const auto lap = assemble(constant_field(t, 1.0, 0.5), t);

  for (int i = 0; i < 2; ++i) {
    const EdgeField& q = set.flux[static_cast<std::size_t>(i)];
    NodeField rhs(t.node_count());
    for (std::size_t x = 0; x < t.node_count(); ++x) {
      const double d0_q1 = q[t.edge_index(1, t.index({t.coord(x, 0) + 1, t.coord(x, 1), 0}))] - q[t.edge_index(1, x)];
      const double d1_q0 = q[t.edge_index(0, t.index({t.coord(x, 0), t.coord(x, 1) + 1, 0}))] - q[t.edge_index(0, x)];
      rhs[x] = d0_q1 - d1_q0;
    }
    const NodeField oracle = solve_dense_periodic_mean_zero(lap, rhs).solution;
    const NodeField& s = set.sigma[static_cast<std::size_t>(i)][0];
    for (std::size_t x = 0; x < t.node_count(); ++x) {
      CHECK(std::abs(s[x] - oracle[x]) < 1e-8);
      CHECK(set.sigma_value(i, 1, 0, x) == -set.sigma_value(i, 0, 1, x));
    }

    const EdgeField div = sigma_divergence(set.sigma[static_cast<std::size_t>(i)], t);
    for (int j = 0; j < 2; ++j)
      for (std::size_t x = 0; x < t.node_count(); ++x) {
        const std::size_t e = t.edge_index(j, x);
        CHECK(std::abs(div[e] - (q[e] - set.abar(j, i))) < 1e-8);
      }
  }
}

TEST_CASE("homogenized estimate averages symmetrized samples") {
  Tensor a(2), b(2);
  a(0, 0) = 1.0;
  a(0, 1) = 0.2;
  a(1, 0) = 0.0;
  a(1, 1) = 2.0;
  b(0, 0) = 3.0;
  b(1, 1) = 2.0;
  const std::vector<Tensor> samples{a, b};
  const auto est = homogenized_tensor(samples);
  CHECK(est.samples == 2);
  CHECK(est.mean(0, 0) == doctest::Approx(2.0));
  CHECK(est.mean(0, 1) == doctest::Approx(0.05));
  CHECK(est.mean(1, 0) == doctest::Approx(0.05));
  CHECK(est.standard_error(0, 0) == doctest::Approx(1.0));
  CHECK(est.standard_error(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("one-dimensional corrector fluctuation grows like r^{1/2}") {
  EnsembleSpec spec;
  spec.dim = 1;
  const auto ring = DomainGrid::torus(1024, 1);
  std::vector<NodeField> phis;
  // sqrt(n) iterations are far too few for a long ring.
  SolveOptions opts;
  opts.max_iterations = 50000;
  for (std::uint64_t s = 0; s < 32; ++s)
    phis.push_back(compute_correctors(sample_field(spec, ring, s), opts, false).phi[0]);
  const std::vector<int> radii{4, 8, 16, 32, 64};
  const auto prof = fluctuation_profile(phis, ring, 2.0, radii);
  std::vector<std::pair<double, double>> pts;
  for (std::size_t n = 0; n < radii.size(); ++n) pts.emplace_back(radii[n], prof.values[n]);
  const auto fit = fit_rate(pts);
  CHECK(fit.slope > 0.4);
  CHECK(fit.slope < 0.6);
  CHECK(prof.per_sample.size() == 32);

  CHECK_THROWS_AS(fluctuation_powers(phis[0], ring, 2.0, std::vector<int>{257}), ArgumentError);
}

TEST_CASE("minimal radius floors for a constant field") {
  const auto t = DomainGrid::torus(16, 2);
  const auto set = compute_correctors(constant_field(t, 1.0, 0.5), tight());
  const auto mr = minimal_radius(set, {}, 0);
  CHECK(mr.radii == std::vector<int>{1, 2, 4});
  CHECK(mr.chi_star == doctest::Approx(100.0));
  CHECK(mr.infimum_radius == 1.0);
  CHECK_FALSE(mr.chi_censored);
  CHECK(mr.c_star == 1.0);
  CHECK_FALSE(mr.c_censored);
  CHECK(mr.chi_star_star == doctest::Approx(std::pow(4.0, 16.0)).epsilon(1e-12));

  MinimalRadiusParams bad;
  bad.theta = 1.5;
  CHECK_THROWS_AS(minimal_radius(set, bad, 0), ArgumentError);
}

TEST_CASE("minimal radius censors when the oscillation never settles") {
  EnsembleSpec spec;
  spec.alpha = 0.01;
  spec.beta = 100.0;
  spec.lambda = 0.01;
  const auto t = DomainGrid::torus(16, 2);
  const auto set = compute_correctors(sample_field(spec, t, 0), tight());
  MinimalRadiusParams params;
  params.theta = 1e-6;
  const auto mr = minimal_radius(set, params, t.index({8, 8, 0}));
  CHECK(mr.chi_censored);
  CHECK(mr.infimum_radius == 4.0);
  CHECK(mr.chi_star == doctest::Approx(1e12));
  for (double o : mr.oscillation) CHECK(o > 0.0);
}
