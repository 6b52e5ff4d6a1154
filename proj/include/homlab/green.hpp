#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "homlab/boundary.hpp"
#include "homlab/domain.hpp"
#include "homlab/field.hpp"
#include "homlab/lattice.hpp"
#include "homlab/solver.hpp"
#include "homlab/tensor.hpp"

namespace homlab {

/// G(source, .) on a box: A G = unit impulse at `source`, zero on the layer.
struct GreenColumn {
  std::size_t source = 0;
  NodeField values;
  double residual = 0.0;
  std::size_t iterations = 0;
};

GreenColumn green_column(const LinearSystem& box_system, std::size_t source, const SolveOptions& opts = {});
/// Column of the constant-tensor operator -div(abar grad .).
GreenColumn homogenized_green(const Tensor& abar, const DomainGrid& box, std::size_t source,
                              const SolveOptions& opts = {});

/// Columns at x and at x + e_k for every axis: enough for first and mixed
/// differences in both arguments.
struct GreenStencil {
  std::size_t x = 0;
  GreenColumn base;
  std::vector<GreenColumn> shifted;
};

GreenStencil green_stencil(const LinearSystem& box_system, std::size_t x, const SolveOptions& opts = {});

/// Entry (k, m) = G(x+e_k, y+e_m) - G(x+e_k, y) - G(x, y+e_m) + G(x, y).
/// Requires |x - y|_inf >= 2 and y interior.
Tensor mixed_second_derivative(const GreenStencil& stencil, const DomainGrid& box, std::size_t y);

/// (grad G(source, .))(y, m) on the forward edges of y, as a vector over m.
std::vector<double> column_gradient(const GreenColumn& column, const DomainGrid& box, std::size_t y);

struct ExpansionRecord {
  std::size_t x = 0;
  std::size_t y = 0;
  double distance = 0.0;
  Tensor mixed;
  Tensor prediction;
  /// mixed + sign * prediction.
  Tensor error;
  /// Corrector-free error: mixed - mixed derivative of the homogenized column.
  Tensor naive;
};

/// prediction(k, m) = sum_ij dk Phi_i(x) H_ij dm Phi_j(y), H the mixed
/// derivative of the homogenized Green function.
ExpansionRecord expansion_record(const GreenStencil& quenched, const GreenStencil& homogenized,
                                 const BoundaryCorrectorSet& correctors, std::size_t y, double sign);

double euclidean_distance(const DomainGrid& grid, std::size_t a, std::size_t b);

}  // namespace homlab
