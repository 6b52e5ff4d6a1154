#include "homlab/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "homlab/errors.hpp"

namespace homlab {

namespace {

void require_box(const DomainGrid& grid) {
  if (grid.is_torus()) throw ArgumentError("boundary correctors live on a box");
}

double interior_norm(const NodeField& f, const DomainGrid& grid) {
  double acc = 0.0;
  for (std::size_t x : grid.unknown_nodes()) acc += f[x] * f[x];
  return std::sqrt(acc);
}

}  // namespace

BoundaryCorrector solve_boundary_corrector(const CoefficientField& field, const LinearSystem& box_system, int axis,
                                           const SolveOptions& opts, BoundaryForm form) {
  const DomainGrid& grid = box_system.grid;
  require_box(grid);
  if (!field.matches(grid)) throw ArgumentError("field does not match the box");
  if (axis < 0 || axis >= grid.dim()) throw ArgumentError("axis out of range");

  const NodeField rhs = divergence_of_axis_flux(grid, field, axis);
  BoundaryCorrector out;
  if (form == BoundaryForm::divergence) {
    SolveResult s = solve_cg(box_system, rhs, opts);
    out.psi = std::move(s.solution);
    out.iterations = s.iterations;
  } else {
    NodeField linear(grid.node_count());
    for (std::size_t x = 0; x < grid.node_count(); ++x) linear[x] = grid.coord(x, axis);
    SolveResult s = solve_cg(box_system, box_system.dirichlet_lift(linear), opts);
    out.psi = std::move(s.solution);
    for (std::size_t x : grid.unknown_nodes()) out.psi[x] -= linear[x];
    out.iterations = s.iterations;
  }

  out.gradient = gradient(grid, out.psi);
  EdgeField flux(grid.edge_slots());
  for (int k = 0; k < grid.dim(); ++k)
    for (std::size_t x = 0; x < grid.node_count(); ++x) {
      if (!grid.edge_active(k, x)) continue;
      const std::size_t e = grid.edge_index(k, x);
      flux[e] = field.values[e] * (out.gradient[e] + (k == axis ? 1.0 : 0.0));
    }
  const double scale = interior_norm(rhs, grid);
  const double res = interior_norm(divergence(grid, flux), grid);
  out.residual = scale > 0.0 ? res / scale : res;
  return out;
}

BoundaryCorrectorSet compute_boundary_correctors(const CoefficientField& box_field, const SolveOptions& opts) {
  if (box_field.kind != DomainKind::box) throw ArgumentError("boundary correctors need a box field");
  BoundaryCorrectorSet set;
  set.grid = box_field.domain();
  const LinearSystem system = assemble(box_field, set.grid);
  for (int i = 0; i < set.grid.dim(); ++i) {
    BoundaryCorrector c = solve_boundary_corrector(box_field, system, i, opts);
    set.psi.push_back(std::move(c.psi));
    set.gradient.push_back(std::move(c.gradient));
    set.residual.push_back(c.residual);
  }
  return set;
}

NodeField restrict_nodes(const NodeField& torus_values, const DomainGrid& torus, const DomainGrid& box) {
  if (!torus.is_torus() || box.is_torus()) throw ArgumentError("restriction goes from a torus to a box");
  if (torus.dim() != box.dim() || box.extent() > torus.side())
    throw ArgumentError("box of side " + std::to_string(box.side()) + " does not fit in torus of side " +
                        std::to_string(torus.side()));
  if (torus_values.size() != torus.node_count()) throw ArgumentError("node field does not match the torus");
  NodeField out(box.node_count());
  for (std::size_t x = 0; x < box.node_count(); ++x) out[x] = torus_values[torus.index(box.coords(x))];
  return out;
}

ErrorField error_field(const NodeField& psi, const NodeField& phi_on_box, const DomainGrid& box) {
  require_box(box);
  if (psi.size() != box.node_count() || phi_on_box.size() != box.node_count())
    throw ArgumentError("error field inputs do not match the box");
  ErrorField out;
  out.q = NodeField(box.node_count());
  for (std::size_t x = 0; x < box.node_count(); ++x) out.q[x] = psi[x] - phi_on_box[x];
  out.gradient = gradient(box, out.q);
  return out;
}

double node_gradient_square(std::span<const EdgeField> gradients, const DomainGrid& grid, std::size_t node) {
  double acc = 0.0;
  for (int k = 0; k < grid.dim(); ++k) {
    if (!grid.edge_active(k, node)) continue;
    const std::size_t e = grid.edge_index(k, node);
    for (const EdgeField& g : gradients) acc += g[e] * g[e];
  }
  return acc;
}

bool corner_tie(const DomainGrid& box, std::size_t node) {
  const int d = box.delta(node);
  int axes = 0;
  for (int k = 0; k < box.dim(); ++k) {
    const int x = box.coord(node, k);
    if (x == d || box.side() - x == d) ++axes;
  }
  return axes > 1;
}

std::vector<int> layer_bins(const DomainGrid& box) {
  std::vector<int> bins;
  for (int b = 1; 4 * b <= box.side(); b *= 2) bins.push_back(b);
  return bins;
}

std::vector<double> layer_powers(std::span<const EdgeField> gradients, const DomainGrid& box, double p,
                                 std::span<const int> bins) {
  require_box(box);
  std::vector<double> acc(bins.size(), 0.0);
  std::vector<std::size_t> count(bins.size(), 0);
  for (std::size_t x : box.unknown_nodes()) {
    const auto it = std::find(bins.begin(), bins.end(), box.delta(x));
    if (it == bins.end() || corner_tie(box, x)) continue;
    const auto b = static_cast<std::size_t>(it - bins.begin());
    const double sq = node_gradient_square(gradients, box, x);
    acc[b] += p == 2.0 ? sq : std::pow(sq, p / 2.0);
    ++count[b];
  }
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (count[b] == 0) throw ArgumentError("layer bin delta = " + std::to_string(bins[b]) + " is empty");
    acc[b] /= static_cast<double>(count[b]);
  }
  return acc;
}

EdgeField bump_weight(const DomainGrid& box, int axis) {
  require_box(box);
  EdgeField w(box.edge_slots());
  double mass = 0.0;
  const double L = box.side();
  for (std::size_t x = 0; x < box.node_count(); ++x) {
    if (!box.edge_active(axis, x)) continue;
    double v = 1.0;
    for (int k = 0; k < box.dim(); ++k) {
      const double m = box.coord(x, k) + (k == axis ? 0.5 : 0.0);
      const double s = std::sin(std::numbers::pi * m / L);
      v *= s * s;
    }
    w[box.edge_index(axis, x)] = v;
    mass += v;
  }
  for (double& v : w) v /= mass;
  return w;
}

EdgeField uniform_weight(const DomainGrid& box, int axis) {
  EdgeField w(box.edge_slots());
  std::size_t n = 0;
  for (std::size_t x = 0; x < box.node_count(); ++x)
    if (box.edge_active(axis, x)) ++n;
  for (std::size_t x = 0; x < box.node_count(); ++x)
    if (box.edge_active(axis, x)) w[box.edge_index(axis, x)] = 1.0 / static_cast<double>(n);
  return w;
}

double weighted_average(const EdgeField& gradient, const EdgeField& weight) {
  if (gradient.size() != weight.size()) throw ArgumentError("weight does not match the gradient");
  return dot(gradient.span(), weight.span());
}

NodeField probe_boundary_data(const DomainGrid& box, std::uint64_t seed) {
  require_box(box);
  std::mt19937_64 rng(seed);
  NodeField g(box.node_count());
  for (std::size_t x = 0; x < box.node_count(); ++x)
    if (box.coord(x, 0) == box.side()) g[x] = -1.0 + 2.0 * unit_uniform(rng);
  return g;
}

NodeField solve_dirichlet(const LinearSystem& box_system, const NodeField& data, const SolveOptions& opts) {
  const DomainGrid& grid = box_system.grid;
  require_box(grid);
  NodeField u = solve_cg(box_system, box_system.dirichlet_lift(data), opts).solution;
  for (std::size_t x = 0; x < grid.node_count(); ++x)
    if (grid.is_boundary(x)) u[x] = data[x];
  return u;
}

std::vector<double> half_ball_energy(const NodeField& u, const DomainGrid& box, std::size_t base,
                                     std::span<const int> radii) {
  require_box(box);
  const EdgeField g = gradient(box, u);
  const std::vector<EdgeField> one{g};
  const Coord b = box.coords(base);
  std::vector<double> sum(radii.size(), 0.0);
  std::vector<std::size_t> count(radii.size(), 0);
  for (std::size_t x = 0; x < box.node_count(); ++x) {
    if (box.coord(x, 0) >= box.side()) continue;
    double dist2 = 0.0;
    for (int k = 0; k < box.dim(); ++k) {
      const double dx = box.coord(x, k) - b[static_cast<std::size_t>(k)];
      dist2 += dx * dx;
    }
    const double sq = node_gradient_square(one, box, x);
    for (std::size_t n = 0; n < radii.size(); ++n)
      if (dist2 <= static_cast<double>(radii[n]) * radii[n]) {
        sum[n] += sq;
        ++count[n];
      }
  }
  std::vector<double> out(radii.size());
  for (std::size_t n = 0; n < radii.size(); ++n)
    out[n] = count[n] ? std::sqrt(sum[n] / static_cast<double>(count[n])) : 0.0;
  return out;
}

LipschitzCurve lipschitz_probe(const CoefficientField& box_field, std::uint64_t data_seed, std::span<const int> radii,
                               const SolveOptions& opts) {
  if (box_field.kind != DomainKind::box) throw ArgumentError("Lipschitz probe needs a box field");
  const DomainGrid box = box_field.domain();
  Coord base{0, 0, 0};
  for (int k = 1; k < box.dim(); ++k) base[static_cast<std::size_t>(k)] = box.side() / 2;
  const NodeField u = solve_dirichlet(assemble(box_field, box), probe_boundary_data(box, data_seed), opts);
  LipschitzCurve curve;
  curve.radii.assign(radii.begin(), radii.end());
  curve.energy = half_ball_energy(u, box, box.index(base), radii);
  return curve;
}

double curve_ratio(const LipschitzCurve& curve, int r_min, int r_max) {
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (std::size_t n = 0; n < curve.radii.size(); ++n) {
    if (curve.radii[n] < r_min || curve.radii[n] > r_max) continue;
    const double v = curve.energy[n];
    lo = any ? std::min(lo, v) : v;
    hi = any ? std::max(hi, v) : v;
    any = true;
  }
  if (!any) throw ArgumentError("empty radius window");
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

double holder_ratio(const LipschitzCurve& curve, double alpha, int r_min, int r_max) {
  const auto top = std::find(curve.radii.begin(), curve.radii.end(), r_max);
  if (top == curve.radii.end()) throw ArgumentError("outer radius not on the curve");
  const double e_top = curve.energy[static_cast<std::size_t>(top - curve.radii.begin())];
  if (!(e_top > 0.0)) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t n = 0; n < curve.radii.size(); ++n) {
    const int r = curve.radii[n];
    if (r < r_min || r > r_max) continue;
    worst = std::max(worst, std::pow(static_cast<double>(r) / r_max, 1.0 - alpha) * curve.energy[n] / e_top);
  }
  return worst;
}

}  // namespace homlab
