#include "homlab/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "homlab/boundary.hpp"
#include "homlab/errors.hpp"
#include "homlab/stats.hpp"

namespace homlab {

double corrector_functional(const CoefficientField& box_field, const EdgeField& g, int axis, const SolveOptions& opts) {
  const DomainGrid box = box_field.domain();
  const BoundaryCorrector c = solve_boundary_corrector(box_field, assemble(box_field, box), axis, opts);
  return weighted_average(c.gradient, g);
}

Sensitivity adjoint_sensitivity(const CoefficientField& box_field, const EdgeField& g, int axis,
                                const SolveOptions& opts) {
  if (box_field.kind != DomainKind::box) throw ArgumentError("sensitivity is computed on a box");
  const DomainGrid box = box_field.domain();
  if (g.size() != box.edge_slots()) throw ArgumentError("weight does not match the box");
  const LinearSystem system = assemble(box_field, box);
  const BoundaryCorrector c = solve_boundary_corrector(box_field, system, axis, opts);

  const NodeField v = solve_cg(system, divergence(box, g), opts).solution;
  const EdgeField gv = gradient(box, v);

  Sensitivity s;
  s.value = weighted_average(c.gradient, g);
  s.derivative = EdgeField(box.edge_slots());
  for (int k = 0; k < box.dim(); ++k)
    for (std::size_t x = 0; x < box.node_count(); ++x) {
      if (!box.edge_active(k, x)) continue;
      const std::size_t e = box.edge_index(k, x);
      s.derivative[e] = gv[e] * (c.gradient[e] + (k == axis ? 1.0 : 0.0));
    }
  return s;
}

double edge_poincare_constant(const EnsembleSpec& spec) {
  if (spec.degenerate()) return 0.0;
  if (spec.law == Law::two_phase)
    throw ArgumentError("a two-point law has no derivative Poincare inequality; use log-uniform");
  const double w = 2.0 * std::log(1.0 / spec.lambda) / std::numbers::pi;
  return w * w / (spec.lambda * spec.lambda);
}

SpectralGapProbe spectral_gap_summary(const EnsembleSpec& spec, std::span<const double> values,
                                      std::span<const double> energies) {
  if (values.size() != energies.size() || values.size() < 2)
    throw ArgumentError("spectral gap summary needs matching samples, at least 2");
  SpectralGapProbe p;
  p.samples = values.size();
  p.poincare = edge_poincare_constant(spec);
  p.variance = variance(values);
  // Var of the unbiased variance estimator via the fourth central moment.
  const double m = mean(values);
  double m4 = 0.0;
  for (double v : values) m4 += std::pow(v - m, 4);
  m4 /= static_cast<double>(values.size());
  const double n = static_cast<double>(values.size());
  p.variance_se = std::sqrt(std::max(0.0, (m4 - p.variance * p.variance * (n - 3.0) / (n - 1.0)) / n));
  p.derivative_energy = mean(energies);
  p.derivative_energy_se = standard_error_of_mean(energies);
  const double rhs = p.poincare * p.derivative_energy;
  p.ratio = rhs > 0.0 ? p.variance / rhs : 0.0;
  const double slack = 3.0 * std::hypot(p.variance_se, p.poincare * p.derivative_energy_se);
  p.holds = p.variance <= rhs + slack;
  return p;
}

SpectralGapProbe spectral_gap_probe(const EnsembleSpec& spec, int box_side, const EdgeField& g, int axis,
                                    std::size_t n_samples, const SolveOptions& opts) {
  spec.validate();
  if (n_samples < 32 && !spec.degenerate()) throw ArgumentError("spectral gap probe needs N >= 32");
  const DomainGrid box = DomainGrid::box(box_side, spec.dim);
  std::vector<double> values, energies;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const Sensitivity sens = adjoint_sensitivity(sample_field(spec, box, s), g, axis, opts);
    values.push_back(sens.value);
    energies.push_back(dot(sens.derivative.span(), sens.derivative.span()));
  }
  return spectral_gap_summary(spec, values, energies);
}

}  // namespace homlab
