#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "exact/core/lobe.hpp"
#include "exact/voxel/image.hpp"

namespace exact::phantom {

inline constexpr float kAirHu = -1000.0f;
inline constexpr float kLungHu = -800.0f;
inline constexpr float kSoftTissueHu = 0.0f;

struct Ellipsoid {
  Vec3 center{0.0, 0.0, 0.0};  // voxel index coordinates (z, y, x)
  Vec3 semi{1.0, 1.0, 1.0};    // semi-axes in voxels

  bool contains(double z, double y, double x) const {
    const double dz = (z - center[0]) / semi[0];
    const double dy = (y - center[1]) / semi[1];
    const double dx = (x - center[2]) / semi[2];
    return dz * dz + dy * dy + dx * dx <= 1.0;
  }
  bool operator==(const Ellipsoid&) const = default;
};

/// Crude thorax on a 1 mm grid: an elliptic soft-tissue cylinder along z
/// holding two lung ellipsoids. Each lung is cut into lobes by axial fissure
/// planes placed at fractions of its z semi-axis. Low x is the patient's right.
struct AnatomyParams {
  Index3 dims{128, 128, 160};
  double body_center_y = 64.0;
  double body_center_x = 80.0;
  double body_semi_y = 58.0;
  double body_semi_x = 74.0;
  Ellipsoid right_lung{{64.0, 62.0, 48.0}, {52.0, 40.0, 26.0}};
  Ellipsoid left_lung{{64.0, 62.0, 112.0}, {52.0, 40.0, 26.0}};
  double right_upper_fissure = 0.3;  // RUL/RML cut at cz - f * az
  double right_lower_fissure = 0.3;  // RML/RLL cut at cz + f * az
  double left_fissure = 0.0;         // LUL/LLL cut at cz + f * az

  bool operator==(const AnatomyParams&) const = default;

  bool in_body(double y, double x) const {
    const double dy = (y - body_center_y) / body_semi_y;
    const double dx = (x - body_center_x) / body_semi_x;
    return dy * dy + dx * dx <= 1.0;
  }

  std::optional<LobeId> lobe_at(double z, double y, double x) const {
    if (right_lung.contains(z, y, x)) {
      if (z < right_lung.center[0] - right_upper_fissure * right_lung.semi[0]) return LobeId::RUL;
      if (z < right_lung.center[0] + right_lower_fissure * right_lung.semi[0]) return LobeId::RML;
      return LobeId::RLL;
    }
    if (left_lung.contains(z, y, x)) {
      if (z < left_lung.center[0] + left_fissure * left_lung.semi[0]) return LobeId::LUL;
      return LobeId::LLL;
    }
    return std::nullopt;
  }

  void validate() const {
    Geometry{dims, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}}.validate();
    require(body_semi_y > 0 && body_semi_x > 0, Errc::invalid_argument, "body semi-axes must be > 0");
    for (const auto* lung : {&right_lung, &left_lung}) {
      for (int a = 0; a < 3; ++a) {
        require(lung->semi[a] > 0, Errc::invalid_argument, "lung semi-axes must be > 0");
        require(lung->center[a] - lung->semi[a] >= 1.0 && lung->center[a] + lung->semi[a] <= dims[a] - 2.0,
                Errc::invalid_argument, "lung ellipsoid must stay inside the grid");
      }
    }
    require(right_lung.center[2] + right_lung.semi[2] < left_lung.center[2] - left_lung.semi[2],
            Errc::invalid_argument, "lungs must be separated along x");
    for (double f : {right_upper_fissure, right_lower_fissure, left_fissure})
      require(f > -0.9 && f < 0.9, Errc::invalid_argument, "fissure fraction must lie in (-0.9, 0.9)");
    require(-right_upper_fissure < right_lower_fissure, Errc::invalid_argument,
            "right fissures must leave a middle lobe");
  }
};

inline LobeLabelMap rasterize_lobes(const AnatomyParams& a) {
  a.validate();
  LobeLabelMap lobes(Geometry{a.dims, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}}, kBackgroundLabel);
  for (int z = 0; z < a.dims[0]; ++z)
    for (int y = 0; y < a.dims[1]; ++y)
      for (int x = 0; x < a.dims[2]; ++x)
        if (auto l = a.lobe_at(z, y, x)) lobes(z, y, x) = label_of(*l);
  return lobes;
}

/// Noise-free tissue palette: air outside the body, soft tissue inside, lung
/// parenchyma inside the lung ellipsoids.
inline Volume rasterize_tissue(const AnatomyParams& a, const LobeLabelMap& lobes) {
  Volume v(lobes.geometry(), kAirHu);
  for (int z = 0; z < a.dims[0]; ++z)
    for (int y = 0; y < a.dims[1]; ++y)
      for (int x = 0; x < a.dims[2]; ++x) {
        if (lobes(z, y, x) != kBackgroundLabel) {
          v(z, y, x) = kLungHu;
        } else if (a.in_body(y, x)) {
          v(z, y, x) = kSoftTissueHu;
        }
      }
  return v;
}

/// Tight voxel boxes of each lobe, indexed by label code (slot 0 unused).
inline std::array<std::optional<BBox3>, 6> lobe_boxes(const LobeLabelMap& lobes) {
  std::array<std::optional<BBox3>, 6> out;
  const auto& d = lobes.dims();
  for (int z = 0; z < d[0]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[2]; ++x) {
        const auto l = lobes(z, y, x);
        if (l == 0 || l > 5) continue;
        auto& b = out[l];
        if (!b) {
          b = BBox3{{z, y, x}, {z + 1, y + 1, x + 1}};
          continue;
        }
        const Index3 p{z, y, x};
        for (int a = 0; a < 3; ++a) {
          b->min[a] = std::min(b->min[a], p[a]);
          b->max[a] = std::max(b->max[a], p[a] + 1);
        }
      }
  return out;
}

}  // namespace exact::phantom
