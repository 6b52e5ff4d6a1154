#include "homlab/domain.hpp"

#include <algorithm>
#include <string>

#include "homlab/errors.hpp"

namespace homlab {

namespace {

constexpr std::size_t kMaxNodes = std::size_t{1} << 31;

}  // namespace

DomainGrid DomainGrid::torus(int side, int dim) {
  if (side < 2) throw ArgumentError("torus side must be >= 2, got " + std::to_string(side));
  return DomainGrid(DomainKind::torus, side, dim);
}

DomainGrid DomainGrid::box(int side, int dim) {
  if (side < 2) throw ArgumentError("box side must be >= 2, got " + std::to_string(side));
  return DomainGrid(DomainKind::box, side, dim);
}

DomainGrid::DomainGrid(DomainKind kind, int side, int dim)
    : kind_(kind), dim_(dim), side_(side), extent_(kind == DomainKind::torus ? side : side + 1) {
  if (dim < 1 || dim > 3) throw ArgumentError("dimension must be 1, 2 or 3, got " + std::to_string(dim));

  std::size_t n = 1;
  for (int k = 0; k < dim; ++k) {
    if (n > kMaxNodes / static_cast<std::size_t>(extent_))
      throw SizeError("lattice with side " + std::to_string(side) + " in d=" + std::to_string(dim) +
                      " exceeds the node index space");
    n *= static_cast<std::size_t>(extent_);
  }
  nodes_ = n;

  std::size_t s = 1;
  for (int k = dim - 1; k >= 0; --k) {
    strides_[static_cast<std::size_t>(k)] = s;
    s *= static_cast<std::size_t>(extent_);
  }

  if (kind_ == DomainKind::torus) {
    unknown_nodes_.resize(nodes_);
    for (std::size_t i = 0; i < nodes_; ++i) unknown_nodes_[i] = i;
    active_edges_ = static_cast<std::size_t>(dim_) * nodes_;
    return;
  }

  delta_.resize(nodes_);
  node_unknown_.assign(nodes_, npos);
  for (std::size_t node = 0; node < nodes_; ++node) {
    int dist = side_;
    for (int k = 0; k < dim_; ++k) {
      const int x = coord(node, k);
      dist = std::min({dist, x, side_ - x});
    }
    delta_[node] = dist;
    if (dist > 0) {
      node_unknown_[node] = unknown_nodes_.size();
      unknown_nodes_.push_back(node);
    }
  }
  for (int k = 0; k < dim_; ++k)
    for (std::size_t node = 0; node < nodes_; ++node)
      if (edge_active(k, node)) ++active_edges_;
}

Coord DomainGrid::coords(std::size_t node) const noexcept {
  Coord x{0, 0, 0};
  for (int k = 0; k < dim_; ++k) x[static_cast<std::size_t>(k)] = coord(node, k);
  return x;
}

std::size_t DomainGrid::index(const Coord& x) const noexcept {
  std::size_t node = 0;
  for (int k = 0; k < dim_; ++k) {
    int c = x[static_cast<std::size_t>(k)];
    if (kind_ == DomainKind::torus) {
      c %= extent_;
      if (c < 0) c += extent_;
    } else if (c < 0 || c >= extent_) {
      return npos;
    }
    node += static_cast<std::size_t>(c) * strides_[static_cast<std::size_t>(k)];
  }
  return node;
}

std::size_t DomainGrid::neighbor(std::size_t node, int axis, int step) const noexcept {
  const int x = coord(node, axis);
  int y = x + step;
  if (kind_ == DomainKind::torus) {
    y %= extent_;
    if (y < 0) y += extent_;
  } else if (y < 0 || y >= extent_) {
    return npos;
  }
  const auto stride = strides_[static_cast<std::size_t>(axis)];
  return node - static_cast<std::size_t>(x) * stride + static_cast<std::size_t>(y) * stride;
}

bool DomainGrid::edge_active(int axis, std::size_t node) const noexcept {
  if (kind_ == DomainKind::torus) return true;
  if (coord(node, axis) >= side_) return false;
  const std::size_t head = node + strides_[static_cast<std::size_t>(axis)];
  return delta_[node] > 0 || delta_[head] > 0;
}

}  // namespace homlab
