#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace homlab {

enum class DomainKind : std::uint8_t { torus = 0, box = 1 };

using Coord = std::array<int, 3>;

/// Cubic lattice domain of side L in d <= 3 dimensions.
///
/// A torus has L nodes per axis with wrap-around; every node owns one edge per
/// axis (x -> x + e_k), so there are d * L^d edges. A box has L + 1 nodes per
/// axis, coordinates 0..L; nodes with a coordinate equal to 0 or L form the
/// Dirichlet layer and the (L - 1)^d remaining nodes are the unknowns. Edge
/// slots are indexed (axis, node) in both cases; on a box a slot is active when
/// its head lies inside the grid and at least one endpoint is interior.
///
/// Nodes are numbered lexicographically with the last axis fastest.
class DomainGrid {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  static DomainGrid torus(int side, int dim);
  static DomainGrid box(int side, int dim);

  DomainKind kind() const noexcept { return kind_; }
  bool is_torus() const noexcept { return kind_ == DomainKind::torus; }
  int dim() const noexcept { return dim_; }
  int side() const noexcept { return side_; }
  /// Nodes per axis: L on a torus, L + 1 on a box.
  int extent() const noexcept { return extent_; }

  std::size_t node_count() const noexcept { return nodes_; }
  std::size_t edge_slots() const noexcept { return static_cast<std::size_t>(dim_) * nodes_; }
  /// Number of active edges.
  std::size_t edge_count() const noexcept { return active_edges_; }

  std::size_t stride(int axis) const noexcept { return strides_[static_cast<std::size_t>(axis)]; }
  int coord(std::size_t node, int axis) const noexcept {
    return static_cast<int>((node / strides_[static_cast<std::size_t>(axis)]) % static_cast<std::size_t>(extent_));
  }
  Coord coords(std::size_t node) const noexcept;
  /// Node index of a coordinate; wraps on a torus, npos outside a box.
  std::size_t index(const Coord& x) const noexcept;

  /// Node reached from `node` by `step` lattice units along `axis`; npos when
  /// the move leaves a box.
  std::size_t neighbor(std::size_t node, int axis, int step = 1) const noexcept;

  std::size_t edge_index(int axis, std::size_t node) const noexcept {
    return static_cast<std::size_t>(axis) * nodes_ + node;
  }
  bool edge_active(int axis, std::size_t node) const noexcept;

  bool is_boundary(std::size_t node) const noexcept {
    return kind_ == DomainKind::box && delta_[node] == 0;
  }
  /// l-infinity graph distance to the Dirichlet layer (box only; 0 on a torus).
  int delta(std::size_t node) const noexcept { return kind_ == DomainKind::box ? delta_[node] : 0; }
  std::span<const int> delta_field() const noexcept { return delta_; }

  std::size_t unknown_count() const noexcept { return unknown_nodes_.size(); }
  /// unknown -> node map (identity on a torus).
  std::span<const std::size_t> unknown_nodes() const noexcept { return unknown_nodes_; }
  /// node -> unknown map; npos on the Dirichlet layer.
  std::size_t unknown_index(std::size_t node) const noexcept {
    return kind_ == DomainKind::torus ? node : node_unknown_[node];
  }

  friend bool operator==(const DomainGrid& a, const DomainGrid& b) noexcept {
    return a.kind_ == b.kind_ && a.dim_ == b.dim_ && a.side_ == b.side_;
  }

 private:
  DomainGrid(DomainKind kind, int side, int dim);

  DomainKind kind_ = DomainKind::torus;
  int dim_ = 0;
  int side_ = 0;
  int extent_ = 0;
  std::size_t nodes_ = 0;
  std::size_t active_edges_ = 0;
  std::array<std::size_t, 3> strides_{};
  std::vector<int> delta_;
  std::vector<std::size_t> unknown_nodes_;
  std::vector<std::size_t> node_unknown_;
};

}  // namespace homlab
