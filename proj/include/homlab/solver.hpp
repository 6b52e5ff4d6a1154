#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "homlab/field.hpp"
#include "homlab/lattice.hpp"

namespace homlab {

enum class Preconditioner { none, diagonal };

struct SolveOptions {
  double tolerance = 1e-10;
  /// 0 selects 20 * sqrt(unknowns) + 1000.
  std::size_t max_iterations = 0;
  Preconditioner preconditioner = Preconditioner::diagonal;
  /// Called with the current iterate (unknown ordering) after every step.
  std::function<void(std::span<const double>)> on_iterate;

  void validate() const;
  std::size_t iteration_cap(std::size_t unknowns) const;
};

struct SolveResult {
  NodeField solution;
  std::size_t iterations = 0;
  /// ||A u - rhs|| / ||rhs|| recomputed from the returned solution.
  double relative_residual = 0.0;
};

/// Unknowns above which solve_dense refuses to factorize.
inline constexpr std::size_t kDenseLimit = 4096;

/// Preconditioned conjugate gradients. Box systems are SPD; a torus system
/// is accepted only with a mean-zero right-hand side. Throws SolverError when
/// the tolerance is not reached.
SolveResult solve_cg(const LinearSystem& system, const NodeField& rhs, const SolveOptions& opts = {});

/// Dense LDL^T factorization oracle (<= kDenseLimit unknowns). Throws
/// SingularError for singular systems such as an unprojected torus.
SolveResult solve_dense(const LinearSystem& system, const NodeField& rhs);

/// Torus solve of the mean-zero projected system; the result has node mean 0.
SolveResult solve_periodic_mean_zero(const LinearSystem& system, const NodeField& rhs, const SolveOptions& opts = {});

/// Dense counterpart of solve_periodic_mean_zero, via A + (1/n) 1 1^T.
SolveResult solve_dense_periodic_mean_zero(const LinearSystem& system, const NodeField& rhs);

}  // namespace homlab
