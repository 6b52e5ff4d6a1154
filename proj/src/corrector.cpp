#include "homlab/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "homlab/errors.hpp"

namespace homlab {

namespace {

double l2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

void require_torus(const DomainGrid& grid) {
  if (!grid.is_torus()) throw ArgumentError("correctors are defined on a torus");
}

}  // namespace

CorrectorSolution solve_corrector(const CoefficientField& field, const LinearSystem& torus_system, int axis,
                                  const SolveOptions& opts) {
  const DomainGrid& grid = torus_system.grid;
  require_torus(grid);
  const NodeField rhs = divergence_of_axis_flux(grid, field, axis);
  SolveResult solved = solve_periodic_mean_zero(torus_system, rhs, opts);

  CorrectorSolution out;
  out.iterations = solved.iterations;
  out.phi = std::move(solved.solution);
  out.flux = gradient(grid, out.phi);
  for (int k = 0; k < grid.dim(); ++k)
    for (std::size_t x = 0; x < grid.node_count(); ++x) {
      const std::size_t e = grid.edge_index(k, x);
      out.flux[e] = field.values[e] * (out.flux[e] + (k == axis ? 1.0 : 0.0));
    }
  const NodeField div = divergence(grid, out.flux);
  const double scale = l2(rhs.span());
  out.residual = scale > 0.0 ? l2(div.span()) / scale : l2(div.span());
  return out;
}

CorrectorSolution solve_corrector(const CoefficientField& field, const DomainGrid& torus, int axis,
                                  const SolveOptions& opts) {
  require_torus(torus);
  return solve_corrector(field, assemble(field, torus), axis, opts);
}

Tensor sample_tensor(std::span<const EdgeField> fluxes, const DomainGrid& torus) {
  require_torus(torus);
  const int d = torus.dim();
  if (fluxes.size() != static_cast<std::size_t>(d)) throw ArgumentError("need one flux per direction");
  Tensor t(d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) {
      double acc = 0.0;
      for (std::size_t x = 0; x < torus.node_count(); ++x) acc += fluxes[static_cast<std::size_t>(i)][torus.edge_index(k, x)];
      t(k, i) = acc / static_cast<double>(torus.node_count());
    }
  return t;
}

HomogenizedEstimate homogenized_tensor(std::span<const Tensor> per_sample) {
  if (per_sample.empty()) throw ArgumentError("homogenized tensor needs at least one sample");
  const int d = per_sample.front().dim;
  HomogenizedEstimate est;
  est.samples = per_sample.size();
  est.mean = Tensor(d);
  est.standard_error = Tensor(d);
  std::vector<double> column(per_sample.size());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      for (std::size_t s = 0; s < per_sample.size(); ++s) column[s] = per_sample[s].symmetrized()(i, j);
      est.mean(i, j) = mean(column);
      est.standard_error(i, j) = standard_error_of_mean(column);
    }
  return est;
}

std::size_t sigma_pair_count(int dim) { return static_cast<std::size_t>(dim * (dim - 1) / 2); }

std::size_t sigma_pair_index(int j, int k, int dim) {
  if (!(0 <= j && j < k && k < dim)) throw ArgumentError("sigma pair must satisfy 0 <= j < k < d");
  // Row-major enumeration of the strict upper triangle.
  return static_cast<std::size_t>(j * dim - j * (j + 1) / 2 + (k - j - 1));
}

SigmaSolution solve_sigma(const EdgeField& flux, const Tensor& abar, int axis, const LinearSystem& laplacian,
                          const SolveOptions& opts) {
  const DomainGrid& grid = laplacian.grid;
  require_torus(grid);
  if (flux.size() != grid.edge_slots()) throw ArgumentError("flux does not match the torus");
  const int d = grid.dim();
  SigmaSolution out;
  out.components.reserve(sigma_pair_count(d));
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      NodeField rhs(grid.node_count());
      for (std::size_t x = 0; x < grid.node_count(); ++x) {
        const double dj_qk = flux[grid.edge_index(k, grid.neighbor(x, j))] - flux[grid.edge_index(k, x)];
        const double dk_qj = flux[grid.edge_index(j, grid.neighbor(x, k))] - flux[grid.edge_index(j, x)];
        rhs[x] = dj_qk - dk_qj;
      }
      out.components.push_back(solve_periodic_mean_zero(laplacian, rhs, opts).solution);
    }

  const EdgeField div = sigma_divergence(out.components, grid);
  double worst = 0.0;
  for (int j = 0; j < d; ++j)
    for (std::size_t x = 0; x < grid.node_count(); ++x) {
      const std::size_t e = grid.edge_index(j, x);
      worst = std::max(worst, std::abs(div[e] - (flux[e] - abar(j, axis))));
    }
  out.divergence_residual = worst;
  return out;
}

SigmaSolution solve_sigma(const EdgeField& flux, const Tensor& abar, int axis, const DomainGrid& torus,
                          const SolveOptions& opts) {
  require_torus(torus);
  return solve_sigma(flux, abar, axis, assemble_constant(Tensor::identity(torus.dim()), torus), opts);
}

EdgeField sigma_divergence(std::span<const NodeField> components, const DomainGrid& torus) {
  require_torus(torus);
  const int d = torus.dim();
  if (components.size() != sigma_pair_count(d)) throw ArgumentError("wrong number of sigma components");
  EdgeField div(torus.edge_slots());
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      if (k == j) continue;
      const double sign = j < k ? 1.0 : -1.0;
      const NodeField& s = components[sigma_pair_index(std::min(j, k), std::max(j, k), d)];
      for (std::size_t x = 0; x < torus.node_count(); ++x)
        div[torus.edge_index(j, x)] += sign * (s[x] - s[torus.neighbor(x, k, -1)]);
    }
  return div;
}

double CorrectorSet::sigma_value(int i, int j, int k, std::size_t node) const {
  if (j == k) return 0.0;
  const auto& comps = sigma[static_cast<std::size_t>(i)];
  if (j < k) return comps[sigma_pair_index(j, k, dim())][node];
  return -comps[sigma_pair_index(k, j, dim())][node];
}

CorrectorSet compute_correctors(const CoefficientField& field, const SolveOptions& opts, bool with_sigma) {
  if (field.kind != DomainKind::torus) throw ArgumentError("correctors need a torus field");
  CorrectorSet set;
  set.grid = field.domain();
  const LinearSystem system = assemble(field, set.grid);
  const int d = set.grid.dim();
  for (int i = 0; i < d; ++i) {
    CorrectorSolution sol = solve_corrector(field, system, i, opts);
    set.phi.push_back(std::move(sol.phi));
    set.flux.push_back(std::move(sol.flux));
    set.phi_residual.push_back(sol.residual);
  }
  set.abar = sample_tensor(set.flux, set.grid);
  if (with_sigma && d > 1) {
    const LinearSystem laplacian = assemble_constant(Tensor::identity(d), set.grid);
    for (int i = 0; i < d; ++i) {
      SigmaSolution s = solve_sigma(set.flux[static_cast<std::size_t>(i)], set.abar, i, laplacian, opts);
      set.sigma.push_back(std::move(s.components));
      set.sigma_residual.push_back(s.divergence_residual);
    }
  }
  return set;
}

std::vector<double> fluctuation_powers(const NodeField& phi, const DomainGrid& torus, double p,
                                       std::span<const int> radii) {
  require_torus(torus);
  if (phi.size() != torus.node_count()) throw ArgumentError("corrector does not match the torus");
  std::vector<double> out;
  out.reserve(radii.size());
  for (int r : radii) {
    if (r < 0 || 4 * r > torus.side())
      throw ArgumentError("fluctuation radius " + std::to_string(r) + " exceeds L/4 = " + std::to_string(torus.side() / 4));
    double acc = 0.0;
    for (int k = 0; k < torus.dim(); ++k)
      for (std::size_t x = 0; x < torus.node_count(); ++x) {
        const double diff = std::abs(phi[torus.neighbor(x, k, r)] - phi[x]);
        acc += p == 2.0 ? diff * diff : std::pow(diff, p);
      }
    out.push_back(acc / static_cast<double>(torus.node_count() * static_cast<std::size_t>(torus.dim())));
  }
  return out;
}

FluctuationProfile profile_from_powers(std::vector<std::vector<double>> per_sample, std::span<const int> radii,
                                       double p) {
  if (per_sample.empty()) throw ArgumentError("fluctuation profile needs at least one sample");
  FluctuationProfile prof;
  prof.radii.assign(radii.begin(), radii.end());
  std::vector<double> column(per_sample.size());
  for (std::size_t r = 0; r < radii.size(); ++r) {
    for (std::size_t s = 0; s < per_sample.size(); ++s) column[s] = per_sample[s][r];
    const MomentEstimate m = moment_from_powers(column, p, r);
    prof.values.push_back(m.value);
    prof.standard_errors.push_back(m.standard_error);
  }
  prof.per_sample = std::move(per_sample);
  return prof;
}

FluctuationProfile fluctuation_profile(std::span<const NodeField> samples, const DomainGrid& torus, double p,
                                       std::span<const int> radii) {
  std::vector<std::vector<double>> per_sample;
  per_sample.reserve(samples.size());
  for (const NodeField& phi : samples) per_sample.push_back(fluctuation_powers(phi, torus, p, radii));
  return profile_from_powers(std::move(per_sample), radii, p);
}

void MinimalRadiusParams::validate() const {
  if (!(theta > 0.0 && theta < 1.0)) throw ArgumentError("theta must lie in (0, 1)");
  if (!(p > 1.0)) throw ArgumentError("p must exceed 1");
  if (!(gamma >= 1.0)) throw ArgumentError("gamma must be >= 1");
  if (!(c_theta > 0.0)) throw ArgumentError("C_theta must be positive");
  const double s = sigma0();
  if (!(s > 0.0 && s <= 0.25)) throw ArgumentError("sigma0 outside (0, 1/4]");
}

MinimalRadius minimal_radius(const CorrectorSet& set, const MinimalRadiusParams& params, std::size_t base_node) {
  params.validate();
  const DomainGrid& grid = set.grid;
  if (grid.side() < 4) throw ArgumentError("minimal radius needs a torus of side >= 4");
  if (base_node >= grid.node_count()) throw ArgumentError("base point outside the torus");
  const int d = grid.dim();

  // (phi, sigma) as one vector per node; sigma_ijk for j < k counts twice in |.|.
  std::vector<const NodeField*> comps;
  std::vector<double> weights;
  for (const auto& phi : set.phi) {
    comps.push_back(&phi);
    weights.push_back(1.0);
  }
  for (const auto& per_dir : set.sigma)
    for (const auto& s : per_dir) {
      comps.push_back(&s);
      weights.push_back(2.0);
    }

  MinimalRadius out;
  for (int r = 1; 4 * r <= grid.side(); r *= 2) out.radii.push_back(r);

  const Coord base = grid.coords(base_node);
  for (int R : out.radii) {
    const int h = 2 * R - 1;
    std::vector<std::size_t> ball;
    Coord off{0, 0, 0};
    const auto visit = [&](auto&& self, int axis) -> void {
      if (axis == d) {
        Coord y = base;
        for (int k = 0; k < d; ++k) y[static_cast<std::size_t>(k)] += off[static_cast<std::size_t>(k)];
        ball.push_back(grid.index(y));
        return;
      }
      for (int o = -h; o <= h; ++o) {
        off[static_cast<std::size_t>(axis)] = o;
        self(self, axis + 1);
      }
    };
    visit(visit, 0);

    std::vector<double> avg(comps.size(), 0.0);
    for (std::size_t c = 0; c < comps.size(); ++c) {
      for (std::size_t node : ball) avg[c] += (*comps[c])[node];
      avg[c] /= static_cast<double>(ball.size());
    }
    double acc = 0.0;
    for (std::size_t node : ball) {
      double sq = 0.0;
      for (std::size_t c = 0; c < comps.size(); ++c) {
        const double dv = (*comps[c])[node] - avg[c];
        sq += weights[c] * dv * dv;
      }
      acc += std::pow(sq, params.p);
    }
    out.oscillation.push_back(std::pow(acc / static_cast<double>(ball.size()), 1.0 / params.p));
  }

  const double gp = params.gamma * params.p_conjugate();
  std::ptrdiff_t last_fail = -1;
  for (std::size_t n = 0; n < out.radii.size(); ++n) {
    const double R = out.radii[n];
    if (std::pow(R, -1.0 / gp) * out.oscillation[n] > params.theta) last_fail = static_cast<std::ptrdiff_t>(n);
  }
  if (last_fail < 0) {
    out.infimum_radius = 1.0;
  } else if (static_cast<std::size_t>(last_fail) + 1 == out.radii.size()) {
    out.infimum_radius = out.radii.back();
    out.chi_censored = true;
  } else {
    out.infimum_radius = 2.0 * out.radii[static_cast<std::size_t>(last_fail)];
  }
  out.chi_star = std::max(out.infimum_radius, std::pow(params.theta, -params.p));

  const double s0 = params.sigma0();
  double best = 1.0;
  std::size_t arg = 0;
  bool above_floor = false;
  for (std::size_t n = 0; n < out.radii.size(); ++n) {
    const double v = std::pow(static_cast<double>(out.radii[n]), -2.0 * s0) * out.oscillation[n];
    if (v > best) {
      best = v;
      arg = n;
      above_floor = true;
    }
  }
  out.c_star = best;
  out.c_censored = above_floor && arg + 1 == out.radii.size();
  out.chi_star_star = std::pow(4.0 * params.c_theta * out.c_star, 1.0 / s0);
  return out;
}

}  // namespace homlab
