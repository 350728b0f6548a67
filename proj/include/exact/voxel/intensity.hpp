#pragma once

#include <algorithm>

#include "exact/voxel/image.hpp"

namespace exact {

/// Window used to standardize CT intensities before detection.
inline constexpr float kClipLowHu = -1000.0f;
inline constexpr float kClipHighHu = 600.0f;

inline Volume clip_intensity(const Volume& vol, float lo = kClipLowHu, float hi = kClipHighHu) {
  require(lo < hi, Errc::invalid_argument, "clip bounds require lo < hi");
  Volume out = vol;
  for (float& v : out.voxels()) v = std::min(hi, std::max(lo, v));
  return out;
}

/// Runtime-typed entry point; label volumes are rejected.
inline Volume clip_intensity(const AnyVolume& vol, float lo = kClipLowHu, float hi = kClipHighHu) {
  require(std::holds_alternative<Volume>(vol), Errc::invalid_argument, "clip_intensity needs an intensity volume");
  return clip_intensity(std::get<Volume>(vol), lo, hi);
}

}  // namespace exact
