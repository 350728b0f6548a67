#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <type_traits>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "exact/core/error.hpp"
#include "exact/voxel/geometry.hpp"

namespace exact {

/// Dense 3D scalar grid with physical geometry. Voxels are stored z-major,
/// x-minor. Element type selects the kind: float holds CT intensities (HU),
/// uint8_t holds label codes (binary masks, lobe maps).
template <class T>
class Image {
 public:
  using value_type = T;

  Image() = default;

  explicit Image(Geometry geom, T fill = T{}) : geom_(geom) {
    geom_.validate();
    data_.assign(static_cast<std::size_t>(product(geom_.dims)), fill);
  }

  Image(Index3 dims, Vec3 spacing, Vec3 origin = {0.0, 0.0, 0.0}, T fill = T{})
      : Image(Geometry{dims, spacing, origin}, fill) {}

  Image(Geometry geom, std::vector<T> voxels) : geom_(geom), data_(std::move(voxels)) {
    geom_.validate();
    require(static_cast<std::int64_t>(data_.size()) == product(geom_.dims),
            Errc::invalid_argument, "voxel count does not match dims");
  }

  const Geometry& geometry() const noexcept { return geom_; }
  const Index3& dims() const noexcept { return geom_.dims; }
  const Vec3& spacing() const noexcept { return geom_.spacing; }
  const Vec3& origin() const noexcept { return geom_.origin; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double voxel_volume() const noexcept { return geom_.spacing[0] * geom_.spacing[1] * geom_.spacing[2]; }

  std::size_t offset(int z, int y, int x) const noexcept {
    return (static_cast<std::size_t>(z) * geom_.dims[1] + static_cast<std::size_t>(y)) * geom_.dims[2] +
           static_cast<std::size_t>(x);
  }
  std::size_t offset(const Index3& p) const noexcept { return offset(p[0], p[1], p[2]); }

  Index3 index_of(std::size_t off) const noexcept {
    const auto nx = static_cast<std::size_t>(geom_.dims[2]);
    const auto ny = static_cast<std::size_t>(geom_.dims[1]);
    return {static_cast<int>(off / (nx * ny)), static_cast<int>((off / nx) % ny), static_cast<int>(off % nx)};
  }

  bool in_bounds(int z, int y, int x) const noexcept {
    return z >= 0 && y >= 0 && x >= 0 && z < geom_.dims[0] && y < geom_.dims[1] && x < geom_.dims[2];
  }
  bool in_bounds(const Index3& p) const noexcept { return in_bounds(p[0], p[1], p[2]); }

  T& operator()(int z, int y, int x) noexcept { return data_[offset(z, y, x)]; }
  const T& operator()(int z, int y, int x) const noexcept { return data_[offset(z, y, x)]; }
  T& operator[](const Index3& p) noexcept { return data_[offset(p)]; }
  const T& operator[](const Index3& p) const noexcept { return data_[offset(p)]; }

  std::span<T> voxels() noexcept { return data_; }
  std::span<const T> voxels() const noexcept { return data_; }

  Vec3 world_of(const Vec3& index) const noexcept {
    return {geom_.origin[0] + index[0] * geom_.spacing[0], geom_.origin[1] + index[1] * geom_.spacing[1],
            geom_.origin[2] + index[2] * geom_.spacing[2]};
  }

  template <class U>
  bool same_geometry(const Image<U>& other) const noexcept {
    return geom_ == other.geometry();
  }

  /// New image on the same grid.
  template <class U>
  Image<U> like(U fill = U{}) const {
    return Image<U>(geom_, fill);
  }

  BBox3 extent_box() const noexcept { return BBox3{{0, 0, 0}, geom_.dims}; }

  friend bool operator==(const Image& a, const Image& b) {
    if (!(a.geom_ == b.geom_)) return false;
    if constexpr (std::is_floating_point_v<T>) {
      // Bitwise, so NaN payloads and signed zeros count as differences.
      return a.data_.size() == b.data_.size() &&
             std::equal(a.data_.begin(), a.data_.end(), b.data_.begin(), [](T l, T r) {
               return std::memcmp(&l, &r, sizeof(T)) == 0;
             });
    } else {
      return a.data_ == b.data_;
    }
  }

 private:
  Geometry geom_;
  std::vector<T> data_;
};

using Volume = Image<float>;
/// Binary {0,1} mask sharing the geometry of the volume it annotates.
using Mask = Image<std::uint8_t>;
/// Labels 0 (background) and LobeId codes 1..5.
using LobeLabelMap = Image<std::uint8_t>;

/// Either kind, as read back from disk.
using AnyVolume = std::variant<Volume, Image<std::uint8_t>>;

template <class U, class V>
void require_same_geometry(const Image<U>& a, const Image<V>& b, const char* what) {
  require(a.same_geometry(b), Errc::geometry_mismatch, what);
}

inline std::int64_t count_nonzero(const Mask& m) {
  std::int64_t n = 0;
  for (auto v : m.voxels()) n += v != 0;
  return n;
}

}  // namespace exact
