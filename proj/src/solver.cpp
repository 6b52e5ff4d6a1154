#include "homlab/solver.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "homlab/errors.hpp"

namespace homlab {

void SolveOptions::validate() const {
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw ArgumentError("solver tolerance must lie in (0, 1)");
}

std::size_t SolveOptions::iteration_cap(std::size_t unknowns) const {
  if (max_iterations > 0) return max_iterations;
  return static_cast<std::size_t>(20.0 * std::sqrt(static_cast<double>(unknowns))) + 1000;
}

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double relative_residual(const LinearSystem& system, std::span<const double> x, std::span<const double> b) {
  std::vector<double> r(b.size());
  system.matrix.multiply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  const double bn = norm2(b);
  return bn > 0.0 ? norm2(r) / bn : norm2(r);
}

void remove_mean(std::span<double> v) {
  if (v.empty()) return;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  for (double& x : v) x -= mean;
}

// Jacobi-preconditioned CG on the unknown vector b; x starts at zero.
std::size_t conjugate_gradients(const LinearSystem& system, std::span<const double> b, std::span<double> x,
                                const SolveOptions& opts) {
  const std::size_t n = b.size();
  const std::size_t cap = opts.iteration_cap(n);
  const double bnorm = norm2(b);
  std::fill(x.begin(), x.end(), 0.0);
  if (bnorm == 0.0) return 0;

  std::vector<double> inv_diag(n, 1.0);
  if (opts.preconditioner == Preconditioner::diagonal) {
    const auto diag = system.matrix.diagonal();
    for (std::size_t i = 0; i < n; ++i) inv_diag[i] = diag[i] > 0.0 ? 1.0 / diag[i] : 1.0;
  }

  std::vector<double> r(b.begin(), b.end()), z(n), p(n), ap(n);
  const double target = opts.tolerance * bnorm;
  std::size_t it = 0;
  // A restart recomputes the true residual when the recursive one has drifted.
  for (int restart = 0; restart < 4; ++restart) {
    if (restart > 0) {
      system.matrix.multiply(x, ap);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
      if (system.periodic()) remove_mean(r);
      if (norm2(r) <= target) return it;
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);
    double rnorm = norm2(r);
    while (rnorm > target && it < cap) {
      system.matrix.multiply(p, ap);
      const double pap = dot(p, ap);
      if (!(pap > 0.0)) break;
      const double alpha = rz / pap;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * ap[i];
      }
      ++it;
      if (opts.on_iterate) opts.on_iterate(x);
      rnorm = norm2(r);
      if (rnorm <= target) break;
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      const double rz_next = dot(r, z);
      const double beta = rz_next / rz;
      rz = rz_next;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    if (it >= cap) break;
    std::vector<double> check(n);
    system.matrix.multiply(x, check);
    double true_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ri = b[i] - check[i];
      true_res += ri * ri;
    }
    if (std::sqrt(true_res) <= target) break;
  }
  return it;
}

Eigen::MatrixXd to_dense(const LinearSystem& system) {
  const std::size_t n = system.unknowns();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const auto& m = system.matrix;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t p = m.row_start[r]; p < m.row_start[r + 1]; ++p)
      a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(m.columns[p])) += m.entries[p];
  return a;
}

std::vector<double> dense_solve(const Eigen::MatrixXd& a, const std::vector<double>& b) {
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw SingularError("dense factorization failed");
  const Eigen::VectorXd d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  if (!(d.cwiseAbs().minCoeff() > 1e-10 * dmax)) throw SingularError("matrix is singular to working precision");
  const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(b.size()));
  const Eigen::VectorXd x = ldlt.solve(rhs);
  return {x.data(), x.data() + x.size()};
}

void check_rhs(const LinearSystem& system, const NodeField& rhs) {
  if (rhs.size() != system.grid.node_count()) throw ArgumentError("right-hand side size mismatch");
}

}  // namespace

SolveResult solve_cg(const LinearSystem& system, const NodeField& rhs, const SolveOptions& opts) {
  opts.validate();
  check_rhs(system, rhs);
  const std::vector<double> b = system.gather(rhs);
  std::vector<double> x(b.size());
  const std::size_t it = conjugate_gradients(system, b, x, opts);
  const double res = relative_residual(system, x, b);
  if (res > opts.tolerance)
    throw SolverError("CG did not converge: relative residual " + sci(res) + " after " + std::to_string(it) + " iterations",
                      res, it);
  return {system.scatter(x), it, res};
}

SolveResult solve_periodic_mean_zero(const LinearSystem& system, const NodeField& rhs, const SolveOptions& opts) {
  if (!system.periodic()) throw ArgumentError("mean-zero solve requires a torus system");
  opts.validate();
  check_rhs(system, rhs);
  std::vector<double> b = system.gather(rhs);
  remove_mean(b);
  std::vector<double> x(b.size());
  const std::size_t it = conjugate_gradients(system, b, x, opts);
  remove_mean(x);
  const double res = relative_residual(system, x, b);
  if (res > opts.tolerance)
    throw SolverError("periodic CG did not converge: relative residual " + sci(res) + " after " + std::to_string(it) + " iterations", res, it);
  return {system.scatter(x), it, res};
}

SolveResult solve_dense(const LinearSystem& system, const NodeField& rhs) {
  check_rhs(system, rhs);
  if (system.unknowns() > kDenseLimit)
    throw SizeError("dense oracle limited to " + std::to_string(kDenseLimit) + " unknowns");
  const std::vector<double> b = system.gather(rhs);
  const std::vector<double> x = dense_solve(to_dense(system), b);
  return {system.scatter(x), 0, relative_residual(system, x, b)};
}

SolveResult solve_dense_periodic_mean_zero(const LinearSystem& system, const NodeField& rhs) {
  if (!system.periodic()) throw ArgumentError("mean-zero solve requires a torus system");
  check_rhs(system, rhs);
  if (system.unknowns() > kDenseLimit)
    throw SizeError("dense oracle limited to " + std::to_string(kDenseLimit) + " unknowns");
  std::vector<double> b = system.gather(rhs);
  remove_mean(b);
  Eigen::MatrixXd a = to_dense(system);
  a.array() += 1.0 / static_cast<double>(b.size());
  std::vector<double> x = dense_solve(a, b);
  remove_mean(x);
  return {system.scatter(x), 0, relative_residual(system, x, b)};
}

}  // namespace homlab
