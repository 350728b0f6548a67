#pragma once

#include <algorithm>
#include <cmath>

#include "exact/voxel/image.hpp"
#include "exact/voxel/sample.hpp"

namespace exact {

/// Output dims along each axis: round(dims * spacing_in / target), at least 1.
inline Index3 isotropic_dims(const Geometry& g, double target_spacing) {
  Index3 out;
  for (int a = 0; a < 3; ++a) {
    const double n = std::round(g.dims[a] * g.spacing[a] / target_spacing);
    out[a] = std::max(1, static_cast<int>(n));
  }
  return out;
}

/// Resamples onto an isotropic grid sharing the input origin. Intensity
/// images are interpolated trilinearly; label images use nearest neighbour so
/// no new label values are invented. Samples past the last input voxel
/// replicate the edge.
template <class T>
Image<T> resample_to_isotropic(const Image<T>& vol, double target_spacing) {
  require(target_spacing > 0.0 && std::isfinite(target_spacing), Errc::invalid_argument,
          "target spacing must be positive");
  const Geometry& gin = vol.geometry();
  Geometry gout{isotropic_dims(gin, target_spacing), {target_spacing, target_spacing, target_spacing},
                gin.origin};
  Image<T> out(gout);
  const Vec3 ratio{target_spacing / gin.spacing[0], target_spacing / gin.spacing[1],
                   target_spacing / gin.spacing[2]};
  const auto& d = gout.dims;
  for (int z = 0; z < d[0]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[2]; ++x) {
        const Vec3 src{z * ratio[0], y * ratio[1], x * ratio[2]};
        if constexpr (std::is_floating_point_v<T>) {
          out(z, y, x) = static_cast<T>(sample_trilinear(vol, src, EdgeMode::clamp, 0.0));
        } else {
          out(z, y, x) = sample_nearest(vol, src, EdgeMode::clamp, T{0});
        }
      }
  return out;
}

}  // namespace exact
