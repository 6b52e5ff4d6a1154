#include "homlab/lattice.hpp"

#include <algorithm>
#include <utility>

#include "homlab/errors.hpp"

namespace homlab {

EdgeField gradient(const DomainGrid& grid, const NodeField& u) {
  if (u.size() != grid.node_count()) throw ArgumentError("gradient: node field size mismatch");
  EdgeField g(grid.edge_slots());
  for (int k = 0; k < grid.dim(); ++k)
    for (std::size_t x = 0; x < grid.node_count(); ++x) {
      if (!grid.edge_active(k, x)) continue;
      g[grid.edge_index(k, x)] = u[grid.neighbor(x, k)] - u[x];
    }
  return g;
}

NodeField divergence(const DomainGrid& grid, const EdgeField& flux) {
  if (flux.size() != grid.edge_slots()) throw ArgumentError("divergence: edge field size mismatch");
  NodeField div(grid.node_count());
  for (int k = 0; k < grid.dim(); ++k)
    for (std::size_t x = 0; x < grid.node_count(); ++x) {
      if (!grid.edge_active(k, x)) continue;
      const double f = flux[grid.edge_index(k, x)];
      div[x] += f;
      div[grid.neighbor(x, k)] -= f;
    }
  return div;
}

NodeField divergence_of_axis_flux(const DomainGrid& grid, const CoefficientField& field, int axis) {
  if (!field.matches(grid)) throw ArgumentError("coefficient field does not match the domain");
  if (axis < 0 || axis >= grid.dim()) throw ArgumentError("axis out of range");
  EdgeField flux(grid.edge_slots());
  for (std::size_t x = 0; x < grid.node_count(); ++x) {
    const std::size_t e = grid.edge_index(axis, x);
    if (grid.edge_active(axis, x)) flux[e] = field.values[e];
  }
  return divergence(grid, flux);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t p = row_start[r]; p < row_start[r + 1]; ++p) acc += entries[p] * x[columns[p]];
    y[r] = acc;
  }
}

std::vector<double> SparseMatrix::diagonal() const {
  std::vector<double> diag(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t p = row_start[r]; p < row_start[r + 1]; ++p)
      if (columns[p] == r) diag[r] += entries[p];
  return diag;
}

double SparseMatrix::at(std::size_t row, std::size_t col) const {
  double v = 0.0;
  for (std::size_t p = row_start[row]; p < row_start[row + 1]; ++p)
    if (columns[p] == col) v += entries[p];
  return v;
}

std::vector<double> LinearSystem::gather(const NodeField& u) const {
  if (u.size() != grid.node_count()) throw ArgumentError("node field size mismatch");
  const auto nodes = grid.unknown_nodes();
  std::vector<double> x(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) x[i] = u[nodes[i]];
  return x;
}

NodeField LinearSystem::scatter(std::span<const double> x) const {
  NodeField u(grid.node_count());
  const auto nodes = grid.unknown_nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) u[nodes[i]] = x[i];
  return u;
}

NodeField LinearSystem::dirichlet_lift(const NodeField& g) const {
  if (g.size() != grid.node_count()) throw ArgumentError("boundary data size mismatch");
  NodeField rhs(grid.node_count());
  const auto nodes = grid.unknown_nodes();
  for (const auto& c : couplings) rhs[nodes[c.row]] += c.weight * g[c.node];
  return rhs;
}

NodeField LinearSystem::apply(const NodeField& u) const {
  const std::vector<double> x = gather(u);
  std::vector<double> y(x.size());
  matrix.multiply(x, y);
  return scatter(y);
}

namespace {

// Row-by-row CSR builder; entries pointing at Dirichlet nodes become couplings.
class RowAssembler {
 public:
  explicit RowAssembler(const DomainGrid& grid) : grid_(grid) {
    system_.grid = grid;
    system_.matrix.rows = grid.unknown_count();
    system_.matrix.row_start.reserve(grid.unknown_count() + 1);
  }

  void add(std::size_t node, double value) {
    const std::size_t col = grid_.unknown_index(node);
    if (col == DomainGrid::npos) {
      if (value != 0.0) system_.couplings.push_back({row_, node, -value});
      return;
    }
    row_entries_.emplace_back(col, value);
  }

  void finish_row() {
    std::sort(row_entries_.begin(), row_entries_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    auto& m = system_.matrix;
    for (std::size_t i = 0; i < row_entries_.size();) {
      const std::size_t col = row_entries_[i].first;
      double v = 0.0;
      for (; i < row_entries_.size() && row_entries_[i].first == col; ++i) v += row_entries_[i].second;
      m.columns.push_back(static_cast<std::uint32_t>(col));
      m.entries.push_back(v);
    }
    m.row_start.push_back(m.columns.size());
    row_entries_.clear();
    ++row_;
  }

  LinearSystem take() { return std::move(system_); }

 private:
  const DomainGrid& grid_;
  LinearSystem system_;
  std::vector<std::pair<std::size_t, double>> row_entries_;
  std::size_t row_ = 0;
};

}  // namespace

LinearSystem assemble(const CoefficientField& field, const DomainGrid& grid) {
  if (!field.matches(grid)) throw ArgumentError("coefficient field does not match the domain");
  RowAssembler rows(grid);
  for (const std::size_t x : grid.unknown_nodes()) {
    double diag = 0.0;
    for (int k = 0; k < grid.dim(); ++k) {
      if (grid.edge_active(k, x)) {
        const double a = field.values[grid.edge_index(k, x)];
        diag += a;
        rows.add(grid.neighbor(x, k, +1), -a);
      }
      const std::size_t back = grid.neighbor(x, k, -1);
      if (back != DomainGrid::npos && grid.edge_active(k, back)) {
        const double a = field.values[grid.edge_index(k, back)];
        diag += a;
        rows.add(back, -a);
      }
    }
    rows.add(x, diag);
    rows.finish_row();
  }
  return rows.take();
}

LinearSystem assemble_constant(const Tensor& abar, const DomainGrid& grid) {
  if (abar.dim != grid.dim()) throw ArgumentError("tensor dimension does not match the domain");
  RowAssembler rows(grid);
  const int d = grid.dim();
  for (const std::size_t x : grid.unknown_nodes()) {
    double diag = 0.0;
    for (int k = 0; k < d; ++k) {
      const double a = abar(k, k);
      for (int step : {+1, -1}) {
        diag += a;
        rows.add(grid.neighbor(x, k, step), -a);
      }
    }
    rows.add(x, diag);
    // -2 abar_km d_k d_m u with the four-point cross difference.
    for (int k = 0; k < d; ++k)
      for (int m = k + 1; m < d; ++m) {
        const double c = 0.5 * 0.5 * (abar(k, m) + abar(m, k));
        if (c == 0.0) continue;
        for (int sk : {+1, -1})
          for (int sm : {+1, -1}) {
            const std::size_t y1 = grid.neighbor(x, k, sk);
            if (y1 == DomainGrid::npos) continue;
            const std::size_t y = grid.neighbor(y1, m, sm);
            if (y == DomainGrid::npos) continue;
            rows.add(y, -c * sk * sm);
          }
      }
    rows.finish_row();
  }
  return rows.take();
}

double energy(const CoefficientField& field, const DomainGrid& grid, const NodeField& u) {
  const EdgeField g = gradient(grid, u);
  double acc = 0.0;
  for (int k = 0; k < grid.dim(); ++k)
    for (std::size_t x = 0; x < grid.node_count(); ++x) {
      if (!grid.edge_active(k, x)) continue;
      const std::size_t e = grid.edge_index(k, x);
      acc += field.values[e] * g[e] * g[e];
    }
  return acc;
}

}  // namespace homlab
