#pragma once

#include <array>
#include <cmath>

namespace homlab {

/// Small dense d x d matrix (d <= 3), row-major.
struct Tensor {
  int dim = 0;
  std::array<double, 9> entries{};

  Tensor() = default;
  explicit Tensor(int d) : dim(d) {}

  static Tensor identity(int d, double scale = 1.0) {
    Tensor t(d);
    for (int i = 0; i < d; ++i) t(i, i) = scale;
    return t;
  }

  double& operator()(int i, int j) { return entries[static_cast<std::size_t>(3 * i + j)]; }
  double operator()(int i, int j) const { return entries[static_cast<std::size_t>(3 * i + j)]; }

  Tensor symmetrized() const {
    Tensor s(dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) s(i, j) = 0.5 * ((*this)(i, j) + (*this)(j, i));
    return s;
  }

  double frobenius() const {
    double acc = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) acc += (*this)(i, j) * (*this)(i, j);
    return std::sqrt(acc);
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

}  // namespace homlab
