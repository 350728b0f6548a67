#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <string>

#include "exact/core/error.hpp"

namespace exact {

// Axis order everywhere is (z, y, x): z is the axial (cranio-caudal) axis and
// the outermost in memory, x is the innermost.
using Index3 = std::array<int, 3>;
using Vec3 = std::array<double, 3>;

inline std::string to_string(const Index3& i) {
  return "(" + std::to_string(i[0]) + "," + std::to_string(i[1]) + "," + std::to_string(i[2]) + ")";
}

inline std::int64_t product(const Index3& v) {
  return static_cast<std::int64_t>(v[0]) * v[1] * v[2];
}

/// Axis-aligned box in voxel index space, min inclusive and max exclusive.
struct BBox3 {
  Index3 min{0, 0, 0};
  Index3 max{1, 1, 1};

  bool valid() const {
    return min[0] < max[0] && min[1] < max[1] && min[2] < max[2];
  }

  Index3 extent() const { return {max[0] - min[0], max[1] - min[1], max[2] - min[2]}; }

  std::int64_t volume() const { return valid() ? product(extent()) : 0; }

  bool contains(const Index3& p) const {
    for (int a = 0; a < 3; ++a)
      if (p[a] < min[a] || p[a] >= max[a]) return false;
    return true;
  }

  bool contains(const Vec3& p) const {
    for (int a = 0; a < 3; ++a)
      if (p[a] < min[a] || p[a] > max[a] - 1) return false;
    return true;
  }

  friend auto operator<=>(const BBox3&, const BBox3&) = default;
};

inline BBox3 make_box(const Index3& min, const Index3& max) {
  BBox3 b{min, max};
  require(b.valid(), Errc::invalid_argument, "box requires min < max on every axis");
  return b;
}

inline std::int64_t intersection_volume(const BBox3& a, const BBox3& b) {
  std::int64_t v = 1;
  for (int i = 0; i < 3; ++i) {
    const int lo = std::max(a.min[i], b.min[i]);
    const int hi = std::min(a.max[i], b.max[i]);
    if (hi <= lo) return 0;
    v *= hi - lo;
  }
  return v;
}

inline std::string to_string(const BBox3& b) {
  return "[" + to_string(b.min) + "-" + to_string(b.max) + ")";
}

/// Grid geometry shared by every image type.
struct Geometry {
  Index3 dims{1, 1, 1};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};

  void validate() const {
    for (int a = 0; a < 3; ++a) {
      require(dims[a] >= 1, Errc::invalid_argument, "dims must be >= 1, got " + to_string(dims));
      require(spacing[a] > 0.0, Errc::invalid_argument, "spacing must be > 0");
    }
  }

  bool isotropic(double tol = 1e-9) const {
    return std::abs(spacing[0] - spacing[1]) <= tol && std::abs(spacing[0] - spacing[2]) <= tol;
  }

  bool operator==(const Geometry&) const = default;
};

}  // namespace exact
