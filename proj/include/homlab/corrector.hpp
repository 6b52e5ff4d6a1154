#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "homlab/domain.hpp"
#include "homlab/ensemble.hpp"
#include "homlab/field.hpp"
#include "homlab/lattice.hpp"
#include "homlab/solver.hpp"
#include "homlab/stats.hpp"
#include "homlab/tensor.hpp"

namespace homlab {

/// Periodic corrector for one direction: div a(grad phi + e_i) = 0 on the
/// torus, phi mean zero, flux q = a(grad phi + e_i).
struct CorrectorSolution {
  NodeField phi;
  EdgeField flux;
  /// ||div q|| / ||div(a e_i)||.
  double residual = 0.0;
  std::size_t iterations = 0;
};

CorrectorSolution solve_corrector(const CoefficientField& field, const LinearSystem& torus_system, int axis,
                                  const SolveOptions& opts = {});
CorrectorSolution solve_corrector(const CoefficientField& field, const DomainGrid& torus, int axis,
                                  const SolveOptions& opts = {});

/// Spatial flux average of one sample: entry (k, i) = mean over the torus of
/// q_i on axis-k edges.
Tensor sample_tensor(std::span<const EdgeField> fluxes, const DomainGrid& torus);

struct HomogenizedEstimate {
  Tensor mean;
  Tensor standard_error;
  std::size_t samples = 0;
};

/// Componentwise mean and standard error of per-sample (symmetrized) tensors.
HomogenizedEstimate homogenized_tensor(std::span<const Tensor> per_sample);

/// Index of the independent flux-corrector component (j, k), j < k.
std::size_t sigma_pair_index(int j, int k, int dim);
std::size_t sigma_pair_count(int dim);

/// Flux corrector sigma_i for one direction. Component (j, k) lives on the
/// (j, k) plaquettes, indexed by their base node, and solves
/// -lap sigma_ijk = d_j q_ik - d_k q_ij with forward differences. Its
/// backward-difference divergence then reproduces q_i minus its mean exactly.
struct SigmaSolution {
  std::vector<NodeField> components;
  /// max-norm of div sigma_i - (q_i - abar e_i) over edges.
  double divergence_residual = 0.0;
};

SigmaSolution solve_sigma(const EdgeField& flux, const Tensor& abar, int axis, const DomainGrid& torus,
                          const SolveOptions& opts = {});
/// Same, with a caller-provided unit-conductance torus Laplacian.
SigmaSolution solve_sigma(const EdgeField& flux, const Tensor& abar, int axis, const LinearSystem& laplacian,
                          const SolveOptions& opts = {});

/// (div sigma_i)_j on j-edges: sum_k sigma_ijk(x) - sigma_ijk(x - e_k).
EdgeField sigma_divergence(std::span<const NodeField> components, const DomainGrid& torus);

/// Correctors, fluxes, flux correctors and the sample tensor of one sample.
struct CorrectorSet {
  DomainGrid grid = DomainGrid::torus(2, 1);
  std::vector<NodeField> phi;
  std::vector<EdgeField> flux;
  /// sigma[i][pair] with pair = sigma_pair_index(j, k).
  std::vector<std::vector<NodeField>> sigma;
  Tensor abar;
  std::vector<double> phi_residual;
  std::vector<double> sigma_residual;

  int dim() const noexcept { return grid.dim(); }
  bool has_sigma() const noexcept { return !sigma.empty(); }
  /// sigma_ijk at a plaquette base node, with sigma_ijk = -sigma_ikj.
  double sigma_value(int i, int j, int k, std::size_t node) const;
};

CorrectorSet compute_correctors(const CoefficientField& field, const SolveOptions& opts = {}, bool with_sigma = true);

/// Radius profile r -> <|phi(x + r e_k) - phi(x)|^p>^{1/p}, averaged over base
/// points x, axes k and samples.
struct FluctuationProfile {
  std::vector<int> radii;
  std::vector<double> values;
  std::vector<double> standard_errors;
  /// per_sample[s][r] = mean |phi(x + r e_k) - phi(x)|^p for sample s.
  std::vector<std::vector<double>> per_sample;
};

/// Mean of |phi(x + r e_k) - phi(x)|^p over x and k for one sample.
std::vector<double> fluctuation_powers(const NodeField& phi, const DomainGrid& torus, double p,
                                       std::span<const int> radii);
/// Requires radii <= L/4.
FluctuationProfile fluctuation_profile(std::span<const NodeField> samples, const DomainGrid& torus, double p,
                                       std::span<const int> radii);
FluctuationProfile profile_from_powers(std::vector<std::vector<double>> per_sample, std::span<const int> radii,
                                       double p);

struct MinimalRadiusParams {
  double theta = 0.1;
  double p = 2.0;
  double gamma = 2.0;
  double c_theta = 1.0;

  double p_conjugate() const { return p / (p - 1.0); }
  double sigma0() const { return 1.0 / (4.0 * gamma * p_conjugate()); }
  void validate() const;
};

struct MinimalRadius {
  double chi_star = 1.0;
  double c_star = 1.0;
  double chi_star_star = 1.0;
  /// The infimum part of chi_star before the theta^{-p} floor.
  double infimum_radius = 1.0;
  bool chi_censored = false;
  bool c_censored = false;
  std::vector<int> radii;
  /// (avg over B_2R of |(phi,sigma) - (phi,sigma)_2R|^{2p})^{1/p} per radius.
  std::vector<double> oscillation;
};

/// Dyadic radii R = 1, 2, ..., L/4 and open l-infinity balls of radius 2R
/// around `base_node`. Requires L >= 4.
MinimalRadius minimal_radius(const CorrectorSet& set, const MinimalRadiusParams& params, std::size_t base_node);

}  // namespace homlab
