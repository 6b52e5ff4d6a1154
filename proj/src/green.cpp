#include "homlab/green.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "homlab/errors.hpp"

namespace homlab {

namespace {

void require_interior(const DomainGrid& box, std::size_t node, const char* what) {
  if (box.is_torus()) throw ArgumentError("Green functions are computed on a box");
  if (node >= box.node_count() || box.is_boundary(node))
    throw ArgumentError(std::string(what) + " must be an interior node");
}

GreenColumn solve_column(const LinearSystem& system, std::size_t source, const SolveOptions& opts) {
  require_interior(system.grid, source, "Green source");
  NodeField rhs(system.grid.node_count());
  rhs[source] = 1.0;
  SolveResult s = solve_cg(system, rhs, opts);
  return {source, std::move(s.solution), s.relative_residual, s.iterations};
}

double at(const NodeField& f, std::size_t node) { return node == DomainGrid::npos ? 0.0 : f[node]; }

}  // namespace

GreenColumn green_column(const LinearSystem& box_system, std::size_t source, const SolveOptions& opts) {
  return solve_column(box_system, source, opts);
}

GreenColumn homogenized_green(const Tensor& abar, const DomainGrid& box, std::size_t source,
                              const SolveOptions& opts) {
  return solve_column(assemble_constant(abar, box), source, opts);
}

GreenStencil green_stencil(const LinearSystem& box_system, std::size_t x, const SolveOptions& opts) {
  const DomainGrid& box = box_system.grid;
  GreenStencil s;
  s.x = x;
  s.base = solve_column(box_system, x, opts);
  for (int k = 0; k < box.dim(); ++k) s.shifted.push_back(solve_column(box_system, box.neighbor(x, k), opts));
  return s;
}

double euclidean_distance(const DomainGrid& grid, std::size_t a, std::size_t b) {
  double acc = 0.0;
  for (int k = 0; k < grid.dim(); ++k) {
    const double d = grid.coord(a, k) - grid.coord(b, k);
    acc += d * d;
  }
  return std::sqrt(acc);
}

Tensor mixed_second_derivative(const GreenStencil& stencil, const DomainGrid& box, std::size_t y) {
  require_interior(box, y, "target");
  int sep = 0;
  for (int k = 0; k < box.dim(); ++k) sep = std::max(sep, std::abs(box.coord(y, k) - box.coord(stencil.x, k)));
  if (sep < 2) throw ArgumentError("mixed derivative needs |x - y| >= 2");
  const int d = box.dim();
  Tensor m(d);
  const NodeField& g0 = stencil.base.values;
  for (int k = 0; k < d; ++k) {
    const NodeField& gk = stencil.shifted[static_cast<std::size_t>(k)].values;
    for (int j = 0; j < d; ++j) {
      const std::size_t yj = box.neighbor(y, j);
      m(k, j) = at(gk, yj) - gk[y] - at(g0, yj) + g0[y];
    }
  }
  return m;
}

std::vector<double> column_gradient(const GreenColumn& column, const DomainGrid& box, std::size_t y) {
  if (y >= box.node_count()) throw ArgumentError("target outside the box");
  std::vector<double> g(static_cast<std::size_t>(box.dim()), 0.0);
  for (int m = 0; m < box.dim(); ++m)
    if (box.edge_active(m, y)) g[static_cast<std::size_t>(m)] = at(column.values, box.neighbor(y, m)) - column.values[y];
  return g;
}

ExpansionRecord expansion_record(const GreenStencil& quenched, const GreenStencil& homogenized,
                                 const BoundaryCorrectorSet& correctors, std::size_t y, double sign) {
  const DomainGrid& box = correctors.grid;
  if (quenched.x != homogenized.x) throw ArgumentError("quenched and homogenized stencils differ in source");
  const int d = box.dim();
  ExpansionRecord r;
  r.x = quenched.x;
  r.y = y;
  r.distance = euclidean_distance(box, r.x, y);
  r.mixed = mixed_second_derivative(quenched, box, y);
  const Tensor h = mixed_second_derivative(homogenized, box, y);
  r.prediction = Tensor(d);
  r.error = Tensor(d);
  r.naive = Tensor(d);
  for (int k = 0; k < d; ++k)
    for (int m = 0; m < d; ++m) {
      double acc = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) acc += correctors.grad_phi(i, k, r.x) * h(i, j) * correctors.grad_phi(j, m, y);
      r.prediction(k, m) = acc;
      r.error(k, m) = r.mixed(k, m) + sign * acc;
      r.naive(k, m) = r.mixed(k, m) - h(k, m);
    }
  return r;
}

}  // namespace homlab
