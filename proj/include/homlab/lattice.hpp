#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "homlab/domain.hpp"
#include "homlab/ensemble.hpp"
#include "homlab/field.hpp"
#include "homlab/tensor.hpp"

namespace homlab {

/// (grad u)(x, k) = u(x + e_k) - u(x) on active edges, 0 on inactive slots.
EdgeField gradient(const DomainGrid& grid, const NodeField& u);

/// (div F)(x) = sum_k F(x, k) - F(x - e_k, k) over active edges; the negative
/// adjoint of `gradient`.
NodeField divergence(const DomainGrid& grid, const EdgeField& flux);

/// div(a e_axis), the right-hand side of the corrector equations.
NodeField divergence_of_axis_flux(const DomainGrid& grid, const CoefficientField& field, int axis);

double dot(std::span<const double> a, std::span<const double> b);

/// Compressed-row sparse matrix.
struct SparseMatrix {
  std::size_t rows = 0;
  std::vector<std::size_t> row_start{0};
  std::vector<std::uint32_t> columns;
  std::vector<double> entries;

  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> diagonal() const;
  double at(std::size_t row, std::size_t col) const;
  std::size_t nonzeros() const noexcept { return entries.size(); }
};

/// Coupling of an interior unknown to a Dirichlet node: the lifted right-hand
/// side gains weight * g(node).
struct BoundaryCoupling {
  std::size_t row;
  std::size_t node;
  double weight;
};

/// The operator -div(a grad .) restricted to the unknowns of a domain
/// (all nodes on a torus, interior nodes on a box).
struct LinearSystem {
  DomainGrid grid = DomainGrid::torus(2, 1);
  SparseMatrix matrix;
  std::vector<BoundaryCoupling> couplings;

  bool periodic() const noexcept { return grid.is_torus(); }
  std::size_t unknowns() const noexcept { return matrix.rows; }

  /// Node field -> unknown vector (drops the Dirichlet layer).
  std::vector<double> gather(const NodeField& u) const;
  /// Unknown vector -> node field with zero on the Dirichlet layer.
  NodeField scatter(std::span<const double> x) const;

  /// Right-hand side contribution of Dirichlet data g (given on all nodes,
  /// only layer values are read), as a node field.
  NodeField dirichlet_lift(const NodeField& g) const;

  /// A applied to a node field; result is zero on the Dirichlet layer.
  NodeField apply(const NodeField& u) const;
};

LinearSystem assemble(const CoefficientField& field, const DomainGrid& grid);

/// Constant-coefficient operator -div(abar grad .): conductance abar(k, k) on
/// axis-k edges plus a symmetric cross stencil for off-diagonal entries.
LinearSystem assemble_constant(const Tensor& abar, const DomainGrid& grid);

/// sum_e a(e) |grad u(e)|^2 over active edges.
double energy(const CoefficientField& field, const DomainGrid& grid, const NodeField& u);

}  // namespace homlab
