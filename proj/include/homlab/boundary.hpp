#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "homlab/domain.hpp"
#include "homlab/ensemble.hpp"
#include "homlab/field.hpp"
#include "homlab/lattice.hpp"
#include "homlab/solver.hpp"

namespace homlab {

// Everything here lives in lattice units on a box of side L: Psi_i is the
// Dirichlet boundary corrector, zero on the layer, with Psi_i + x_i a-harmonic.

enum class BoundaryForm {
  /// A Psi = div(a e_i), zero Dirichlet data.
  divergence,
  /// A Phi = 0 with Dirichlet data x_i, then Psi = Phi - x_i.
  harmonic,
};

struct BoundaryCorrector {
  NodeField psi;
  EdgeField gradient;
  /// ||div a(grad Psi + e_i)|| over interior nodes / ||div(a e_i)||.
  double residual = 0.0;
  std::size_t iterations = 0;
};

BoundaryCorrector solve_boundary_corrector(const CoefficientField& field, const LinearSystem& box_system, int axis,
                                           const SolveOptions& opts = {},
                                           BoundaryForm form = BoundaryForm::divergence);

struct BoundaryCorrectorSet {
  DomainGrid grid = DomainGrid::box(2, 1);
  std::vector<NodeField> psi;
  std::vector<EdgeField> gradient;
  std::vector<double> residual;

  int dim() const noexcept { return grid.dim(); }
  /// d_k Phi_i on the edge (node, k), Phi_i = Psi_i + x_i.
  double grad_phi(int i, int k, std::size_t node) const {
    return gradient[static_cast<std::size_t>(i)][grid.edge_index(k, node)] + (i == k ? 1.0 : 0.0);
  }
};

BoundaryCorrectorSet compute_boundary_correctors(const CoefficientField& box_field, const SolveOptions& opts = {});

/// Node values of a torus field copied onto a box (box node x = torus node x).
NodeField restrict_nodes(const NodeField& torus_values, const DomainGrid& torus, const DomainGrid& box);

struct ErrorField {
  NodeField q;
  EdgeField gradient;
};

/// Q = Psi - phi and its lattice gradient.
ErrorField error_field(const NodeField& psi, const NodeField& phi_on_box, const DomainGrid& box);

/// Squared Frobenius norm of the forward-edge gradients at a node, summed over
/// the given gradient fields (inactive slots contribute nothing).
double node_gradient_square(std::span<const EdgeField> gradients, const DomainGrid& grid, std::size_t node);

/// True when the nearest boundary distance is attained on faces of two
/// different axes.
bool corner_tie(const DomainGrid& box, std::size_t node);

/// Dyadic rings delta = 1, 2, 4, ..., L/4.
std::vector<int> layer_bins(const DomainGrid& box);

/// Per-sample ring averages of |grad Q|^p; throws ArgumentError on an empty ring.
std::vector<double> layer_powers(std::span<const EdgeField> gradients, const DomainGrid& box, double p,
                                 std::span<const int> bins);

/// Unit-mass interior weight prod_k sin^2(pi m_k / L) at edge midpoints m,
/// on axis-`axis` edges only.
EdgeField bump_weight(const DomainGrid& box, int axis);
/// Uniform weight 1/#edges on all active edges of the given axis.
EdgeField uniform_weight(const DomainGrid& box, int axis);

/// sum_e w(e) grad Psi_i(e).
double weighted_average(const EdgeField& gradient, const EdgeField& weight);

/// Boundary data for the Lipschitz probe: iid uniform[-1, 1] on the face
/// x_0 = L, zero elsewhere.
NodeField probe_boundary_data(const DomainGrid& box, std::uint64_t seed);

/// Solution with the given Dirichlet data.
NodeField solve_dirichlet(const LinearSystem& box_system, const NodeField& data, const SolveOptions& opts = {});

/// r -> (avg over D_r of |grad u|^2)^{1/2}, where D_r holds the nodes z with
/// |z - base| <= r (Euclidean) and z_0 < L.
std::vector<double> half_ball_energy(const NodeField& u, const DomainGrid& box, std::size_t base,
                                     std::span<const int> radii);

struct LipschitzCurve {
  std::vector<int> radii;
  std::vector<double> energy;
};

/// Zero data on x_0 = 0 and the side faces, random data on x_0 = L; base point
/// at the centre of the zero face.
LipschitzCurve lipschitz_probe(const CoefficientField& box_field, std::uint64_t data_seed, std::span<const int> radii,
                               const SolveOptions& opts = {});

/// max/min of the curve over radii in [r_min, r_max].
double curve_ratio(const LipschitzCurve& curve, int r_min, int r_max);
/// max over r in [r_min, R] of (r/R)^{1-alpha} E(r)/E(R), R = r_max.
double holder_ratio(const LipschitzCurve& curve, double alpha, int r_min, int r_max);

}  // namespace homlab
