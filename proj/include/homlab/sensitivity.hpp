#pragma once

#include <cstddef>
#include <span>

#include "homlab/domain.hpp"
#include "homlab/ensemble.hpp"
#include "homlab/field.hpp"
#include "homlab/lattice.hpp"
#include "homlab/solver.hpp"

namespace homlab {

// Functional F(a) = sum_e g(e) grad Psi_i(e) of the boundary corrector.

double corrector_functional(const CoefficientField& box_field, const EdgeField& g, int axis,
                            const SolveOptions& opts = {});

struct Sensitivity {
  double value = 0.0;
  /// dF/da(e) per edge slot, zero on inactive slots.
  EdgeField derivative;
};

/// Adjoint route: v solves -div a grad v = div g with zero Dirichlet data and
/// dF/da(e) = grad v(e) (grad Psi_i + e_i)(e).
Sensitivity adjoint_sensitivity(const CoefficientField& box_field, const EdgeField& g, int axis,
                                const SolveOptions& opts = {});

/// Poincare constant of the single-edge law, for Var f(a) <= c <f'(a)^2>:
/// (2 ln(1/lambda) / pi)^2 lambda^{-2} for log-uniform, 0 for a point mass.
/// Two-point laws have no such inequality and raise ArgumentError.
double edge_poincare_constant(const EnsembleSpec& spec);

struct SpectralGapProbe {
  std::size_t samples = 0;
  double variance = 0.0;
  double variance_se = 0.0;
  /// Sum over edges of <(dF/da(e))^2>.
  double derivative_energy = 0.0;
  double derivative_energy_se = 0.0;
  double poincare = 0.0;
  /// Var F / (poincare * derivative_energy); 0 when both sides vanish.
  double ratio = 0.0;
  /// Var F <= poincare * energy + 3 sigma.
  bool holds = false;
};

/// Requires N >= 32 (unless the law is a point mass).
SpectralGapProbe spectral_gap_probe(const EnsembleSpec& spec, int box_side, const EdgeField& g, int axis,
                                    std::size_t n_samples, const SolveOptions& opts = {});

/// Combine per-sample values F and derivative energies into the probe summary.
SpectralGapProbe spectral_gap_summary(const EnsembleSpec& spec, std::span<const double> values,
                                      std::span<const double> energies);

}  // namespace homlab
