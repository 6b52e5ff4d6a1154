#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace homlab {

/// Dense scalar field over the nodes or the edge slots of a lattice domain.
/// The tag keeps node and edge quantities from being mixed up.
template <class Tag>
class Field {
 public:
  Field() = default;
  explicit Field(std::size_t n, double value = 0.0) : data_(n, value) {}
  explicit Field(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }
  std::vector<double>& values() noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  friend bool operator==(const Field&, const Field&) = default;

 private:
  std::vector<double> data_;
};

struct NodeTag {};
struct EdgeTag {};

using NodeField = Field<NodeTag>;
using EdgeField = Field<EdgeTag>;

}  // namespace homlab
