#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "homlab/boundary.hpp"
#include "homlab/errors.hpp"
#include "homlab/sensitivity.hpp"

using namespace homlab;

namespace {

SolveOptions tight() {
  SolveOptions o;
  o.tolerance = 1e-13;
  return o;
}

// F through a dense factorization, independent of CG.
double dense_functional(const CoefficientField& f, const EdgeField& g, int axis) {
  const DomainGrid box = f.domain();
  const NodeField psi = solve_dense(assemble(f, box), divergence_of_axis_flux(box, f, axis)).solution;
  return dot(gradient(box, psi).span(), g.span());
}

EdgeField random_gradient(const DomainGrid& box, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  NodeField w(box.node_count());
  for (double& v : w) v = unit_uniform(rng) - 0.5;
  return gradient(box, w);
}

}  // namespace

TEST_CASE("adjoint matches central differences of dense solves") {
  EnsembleSpec spec;
  spec.dim = 2;
  spec.law = Law::log_uniform;
  spec.seed = 3;
  const auto box = DomainGrid::box(6, 2);
  const double h = 1e-6;
  for (bool constant : {true, false}) {
    const auto f = constant ? constant_field(box, 1.3, 0.25) : sample_field(spec, box, 0);
    const auto g = constant ? random_gradient(box, 9) : bump_weight(box, 0);
    const auto s = adjoint_sensitivity(f, g, 0, tight());
    CHECK(s.value == doctest::Approx(dense_functional(f, g, 0)).epsilon(1e-10));
    for (int k = 0; k < 2; ++k)
      for (std::size_t x = 0; x < box.node_count(); ++x) {
        if (!box.edge_active(k, x)) continue;
        const std::size_t e = box.edge_index(k, x);
        EdgeField d(box.edge_slots());
        d[e] = h;
        const double up = dense_functional(perturb(f, d, false), g, 0);
        d[e] = -h;
        const double down = dense_functional(perturb(f, d, false), g, 0);
        CHECK(std::abs((up - down) / (2 * h) - s.derivative[e]) <= 1e-6 * (1.0 + std::abs(s.derivative[e])));
      }
  }
}

TEST_CASE("zero weight gives zero functional and sensitivity") {
  EnsembleSpec spec;
  const auto box = DomainGrid::box(8, 2);
  const auto s = adjoint_sensitivity(sample_field(spec, box, 1), EdgeField(box.edge_slots()), 1, tight());
  CHECK(s.value == 0.0);
  for (double v : s.derivative) CHECK(v == 0.0);
}

TEST_CASE("perturbing an inactive slot changes nothing") {
  EnsembleSpec spec;
  const auto box = DomainGrid::box(8, 2);
  const auto f = sample_field(spec, box, 2);
  const auto g = bump_weight(box, 0);
  const std::size_t x = box.index({8, 3, 0});  // axis-0 edge leaving the box
  REQUIRE_FALSE(box.edge_active(0, x));
  EdgeField d(box.edge_slots());
  d[box.edge_index(0, x)] = 0.5;
  CHECK(corrector_functional(perturb(f, d, false), g, 0) == corrector_functional(f, g, 0));
  CHECK(adjoint_sensitivity(f, g, 0).derivative[box.edge_index(0, x)] == 0.0);
}

TEST_CASE("edge Poincare constant") {
  EnsembleSpec spec;
  spec.law = Law::log_uniform;
  for (double lambda : {0.1, 0.25, 0.5, 0.9}) {
    spec.lambda = lambda;
    const double w = 2.0 * std::log(1.0 / lambda) / std::numbers::pi;
    CHECK(edge_poincare_constant(spec) == doctest::Approx(w * w / (lambda * lambda)));
    // f(a) = a itself must satisfy the inequality.
    CHECK(spec.law_variance() <= edge_poincare_constant(spec));
  }
  spec.law = Law::two_phase;
  CHECK_THROWS_AS(edge_poincare_constant(spec), ArgumentError);
  spec.alpha = spec.beta = 1.0;
  CHECK(edge_poincare_constant(spec) == 0.0);
}

TEST_CASE("spectral gap probe") {
  EnsembleSpec spec;
  spec.alpha = spec.beta = 1.0;
  const auto box = DomainGrid::box(8, 2);
  const auto g = bump_weight(box, 0);
  const auto p = spectral_gap_probe(spec, 8, g, 0, 4);
  CHECK(p.variance == doctest::Approx(0.0).scale(1.0));
  CHECK(p.poincare == 0.0);
  CHECK(p.holds);

  spec.law = Law::log_uniform;
  spec.lambda = 0.5;
  CHECK_THROWS_AS(spectral_gap_probe(spec, 8, g, 0, 8), ArgumentError);
  const auto q = spectral_gap_probe(spec, 8, g, 0, 64);
  CHECK(q.samples == 64);
  CHECK(q.variance > 0.0);
  CHECK(q.ratio > 0.0);
  CHECK(q.holds);
}
