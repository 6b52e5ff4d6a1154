#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "homlab/errors.hpp"
#include "homlab/green.hpp"

using namespace homlab;

namespace {

SolveOptions tight() {
  SolveOptions o;
  o.tolerance = 1e-13;
  return o;
}

// Path 0..L with unit conductances: G(x, y) = min(x, y) (L - max(x, y)) / L.
double path_green(int L, int x, int y) { return std::min(x, y) * (L - std::max(x, y)) / static_cast<double>(L); }

}  // namespace

TEST_CASE("path Green column") {
  const auto box = DomainGrid::box(4, 1);
  const auto g = green_column(assemble(constant_field(box, 1.0, 0.25), box), 1, tight());
  CHECK(g.values[0] == 0.0);
  CHECK(g.values[1] == doctest::Approx(0.75));
  CHECK(g.values[2] == doctest::Approx(0.5));
  CHECK(g.values[3] == doctest::Approx(0.25));
  CHECK(g.values[4] == 0.0);
  CHECK_THROWS_AS(green_column(assemble(constant_field(box, 1.0, 0.25), box), 0), ArgumentError);
}

TEST_CASE("path mixed derivative") {
  const int L = 9;
  const auto box = DomainGrid::box(L, 1);
  const auto st = green_stencil(assemble(constant_field(box, 1.0, 0.25), box), 2, tight());
  const int y = 6;
  const double expect = path_green(L, 3, 7) - path_green(L, 3, 6) - path_green(L, 2, 7) + path_green(L, 2, 6);
  CHECK(mixed_second_derivative(st, box, static_cast<std::size_t>(y))(0, 0) == doctest::Approx(expect));
  CHECK_THROWS_AS(mixed_second_derivative(st, box, 3), ArgumentError);
}

TEST_CASE("scaling and identity tensor") {
  const auto box = DomainGrid::box(8, 2);
  const std::size_t x = box.index({3, 4, 0});
  const auto unit = green_column(assemble(constant_field(box, 1.0, 0.25), box), x, tight());
  const auto scaled = green_column(assemble(constant_field(box, 2.5, 0.25), box), x, tight());
  const auto hom = homogenized_green(Tensor::identity(2), box, x, tight());
  for (std::size_t n = 0; n < box.node_count(); ++n) {
    CHECK(2.5 * scaled.values[n] == doctest::Approx(unit.values[n]).epsilon(1e-10));
    CHECK(hom.values[n] == doctest::Approx(unit.values[n]).epsilon(1e-10));
  }
}

TEST_CASE("homogenized column with diag(1, 4) against a dense solve") {
  const auto box = DomainGrid::box(9, 2);  // 8 x 8 unknowns
  Tensor abar(2);
  abar(0, 0) = 1.0;
  abar(1, 1) = 4.0;
  const std::size_t src = box.index({3, 5, 0});
  const auto g = homogenized_green(abar, box, src, tight());

  // Five-point stencil assembled here, unknowns (i, j) in 1..8.
  const int n = 8;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n * n, n * n);
  const auto id = [&](int i, int j) { return (i - 1) * n + (j - 1); };
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      A(id(i, j), id(i, j)) = 2.0 * 1.0 + 2.0 * 4.0;
      if (i > 1) A(id(i, j), id(i - 1, j)) = -1.0;
      if (i < n) A(id(i, j), id(i + 1, j)) = -1.0;
      if (j > 1) A(id(i, j), id(i, j - 1)) = -4.0;
      if (j < n) A(id(i, j), id(i, j + 1)) = -4.0;
    }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n * n);
  b(id(3, 5)) = 1.0;
  const Eigen::VectorXd u = A.ldlt().solve(b);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) CHECK(std::abs(g.values[box.index({i, j, 0})] - u(id(i, j))) < 1e-8);
}

TEST_CASE("random conductances: symmetry and maximum principle") {
  EnsembleSpec spec;
  spec.dim = 2;
  spec.seed = 8;
  const auto box = DomainGrid::box(12, 2);
  const auto sys = assemble(sample_field(spec, box, 0), box);
  const std::size_t x = box.index({3, 4, 0}), y = box.index({8, 7, 0});
  const auto sx = green_stencil(sys, x, tight());
  const auto sy = green_stencil(sys, y, tight());
  CHECK(std::abs(sx.base.values[y] - sy.base.values[x]) < 1e-8);
  for (double v : sx.base.values) CHECK(v >= 0.0);
  const Tensor mxy = mixed_second_derivative(sx, box, y);
  const Tensor myx = mixed_second_derivative(sy, box, x);
  for (int k = 0; k < 2; ++k)
    for (int m = 0; m < 2; ++m) CHECK(std::abs(mxy(k, m) - myx(m, k)) < 1e-8);
}

TEST_CASE("constant coefficients: expansion error vanishes") {
  const auto box = DomainGrid::box(16, 2);
  const auto f = constant_field(box, 1.5, 0.25);
  const std::size_t x = box.index({6, 8, 0}), y = box.index({10, 8, 0});
  const auto q = green_stencil(assemble(f, box), x, tight());
  const auto h = green_stencil(assemble_constant(Tensor::identity(2, 1.5), box), x, tight());
  const auto bc = compute_boundary_correctors(f, tight());
  const auto r = expansion_record(q, h, bc, y, -1.0);
  CHECK(r.distance == doctest::Approx(4.0));
  CHECK(r.error.frobenius() < 1e-10);
  CHECK(r.naive.frobenius() < 1e-10);
  CHECK(r.mixed.frobenius() > 1e-4);
}
