#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vasctree/error.hpp"

namespace vasctree {

/// Integer lattice coordinate (x, y, z); z is 0 for 2D grids.
using Coord = std::array<int, 3>;

/// Extents of a 2D or 3D lattice, x fastest in storage.
struct Shape {
  std::array<std::size_t, 3> ext{0, 0, 1};
  int ndim = 2;

  static Shape make2d(std::size_t nx, std::size_t ny) { return Shape{{nx, ny, 1}, 2}; }
  static Shape make3d(std::size_t nx, std::size_t ny, std::size_t nz) {
    return Shape{{nx, ny, nz}, 3};
  }

  std::size_t size() const { return ext[0] * ext[1] * ext[2]; }
  bool operator==(const Shape&) const = default;
};

/// Physical size of one cell along each axis (µm for 2D fundus, mm for 3D).
using Spacing = std::array<double, 3>;

/// Dense row-major lattice of values with physical spacing.
template <class T>
class Grid {
 public:
  Grid() = default;

  explicit Grid(Shape shape, Spacing spacing = {1.0, 1.0, 1.0}, T fill = T{})
      : shape_(shape), spacing_(spacing), data_(shape.size(), fill) {
    if (shape.ndim != 2 && shape.ndim != 3) throw DataError("grid must be 2D or 3D");
    if (shape.ndim == 2 && shape.ext[2] != 1) throw DataError("2D grid must have z extent 1");
    for (int a = 0; a < shape.ndim; ++a) {
      if (!(spacing[a] > 0.0)) throw DataError("grid spacing must be strictly positive");
    }
  }

  /// Converts the value type, keeping shape and spacing.
  template <class U>
  static Grid from(const Grid<U>& other) {
    Grid g(other.shape(), other.spacing());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<T>(other[i]);
    return g;
  }

  const Shape& shape() const { return shape_; }
  const Spacing& spacing() const { return spacing_; }
  void set_spacing(const Spacing& s) { spacing_ = s; }
  int ndim() const { return shape_.ndim; }
  std::size_t nx() const { return shape_.ext[0]; }
  std::size_t ny() const { return shape_.ext[1]; }
  std::size_t nz() const { return shape_.ext[2]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(std::size_t x, std::size_t y, std::size_t z = 0) const {
    return (z * ny() + y) * nx() + x;
  }
  std::size_t index(const Coord& c) const {
    return index(static_cast<std::size_t>(c[0]), static_cast<std::size_t>(c[1]),
                 static_cast<std::size_t>(c[2]));
  }
  Coord coord(std::size_t i) const {
    const std::size_t x = i % nx();
    const std::size_t y = (i / nx()) % ny();
    const std::size_t z = i / (nx() * ny());
    return {static_cast<int>(x), static_cast<int>(y), static_cast<int>(z)};
  }
  bool contains(const Coord& c) const {
    return c[0] >= 0 && c[1] >= 0 && c[2] >= 0 && static_cast<std::size_t>(c[0]) < nx() &&
           static_cast<std::size_t>(c[1]) < ny() && static_cast<std::size_t>(c[2]) < nz();
  }

  T& at(std::size_t x, std::size_t y, std::size_t z = 0) { return data_[index(x, y, z)]; }
  const T& at(std::size_t x, std::size_t y, std::size_t z = 0) const {
    return data_[index(x, y, z)];
  }
  T& at(const Coord& c) { return data_[index(c)]; }
  const T& at(const Coord& c) const { return data_[index(c)]; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  Shape shape_{};
  Spacing spacing_{1.0, 1.0, 1.0};
  std::vector<T> data_;
};

/// Per-cell label grid. Binary masks use 0/1; A/V label maps use Label values.
using MaskGrid = Grid<std::uint8_t>;
/// Real-valued field (probabilities, skeletons, radii, distances).
using ScalarField = Grid<double>;
using LabelField = Grid<std::int32_t>;

/// A/V label alphabet. `both` marks crossings and belongs to either class.
enum class Label : std::uint8_t { background = 0, artery = 1, vein = 2, both = 3 };

/// Which vessels a binary mask is derived from. `single` means any foreground.
enum class VesselClass { single, artery, vein };

const char* to_string(VesselClass c);
VesselClass vessel_class_from_string(const std::string& s);

template <class A, class B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
  if (!(a.shape() == b.shape())) {
    throw DataError(std::string(what) + ": grid dimensions do not match");
  }
}

}  // namespace vasctree
