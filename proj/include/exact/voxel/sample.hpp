#pragma once

#include <algorithm>
#include <cmath>

#include "exact/voxel/image.hpp"

namespace exact {

/// Out-of-grid values: air for intensities, background for labels.
template <class T>
constexpr T default_pad_value() {
  if constexpr (std::is_floating_point_v<T>) {
    return static_cast<T>(-1000.0);
  } else {
    return T{0};
  }
}

enum class EdgeMode { clamp, pad };

/// Trilinear sample at a continuous index position.
template <class T>
double sample_trilinear(const Image<T>& img, const Vec3& pos, EdgeMode edge, double pad) {
  const auto& d = img.dims();
  Vec3 p = pos;
  if (edge == EdgeMode::pad) {
    for (int a = 0; a < 3; ++a)
      if (p[a] < -0.5 || p[a] > d[a] - 0.5) return pad;
  }
  for (int a = 0; a < 3; ++a) p[a] = std::clamp(p[a], 0.0, static_cast<double>(d[a] - 1));

  int i0[3];
  int i1[3];
  double w[3];
  for (int a = 0; a < 3; ++a) {
    const double f = std::floor(p[a]);
    i0[a] = static_cast<int>(f);
    i1[a] = std::min(i0[a] + 1, d[a] - 1);
    w[a] = p[a] - f;
  }
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz) {
    const double wz = dz ? w[0] : 1.0 - w[0];
    if (wz == 0.0) continue;
    const int z = dz ? i1[0] : i0[0];
    for (int dy = 0; dy < 2; ++dy) {
      const double wy = dy ? w[1] : 1.0 - w[1];
      if (wy == 0.0) continue;
      const int y = dy ? i1[1] : i0[1];
      for (int dx = 0; dx < 2; ++dx) {
        const double wx = dx ? w[2] : 1.0 - w[2];
        if (wx == 0.0) continue;
        const int x = dx ? i1[2] : i0[2];
        acc += wz * wy * wx * static_cast<double>(img(z, y, x));
      }
    }
  }
  return acc;
}

template <class T>
T sample_nearest(const Image<T>& img, const Vec3& pos, EdgeMode edge, T pad) {
  const auto& d = img.dims();
  Index3 q;
  for (int a = 0; a < 3; ++a) {
    q[a] = static_cast<int>(std::floor(pos[a] + 0.5));
    if (q[a] < 0 || q[a] >= d[a]) {
      if (edge == EdgeMode::pad) return pad;
      q[a] = std::clamp(q[a], 0, d[a] - 1);
    }
  }
  return img[q];
}

}  // namespace exact
