#pragma once

#include <array>

#include "exact/core/lobe.hpp"
#include "exact/voxel/image.hpp"

namespace exact {

/// Keeps voxels whose lobe label is in `keep` and sets everything else
/// (other lobes and non-lung background) to `fill`.
inline Volume apply_lobe_mask(const Volume& vol, const LobeLabelMap& lobes, const LobeSet& keep,
                              float fill = -1000.0f) {
  require(!keep.empty(), Errc::invalid_argument, "lobe keep set must not be empty");
  require_same_geometry(vol, lobes, "apply_lobe_mask: volume and lobe map geometry differ");
  std::array<bool, 256> kept{};
  for (LobeId l : keep) kept[label_of(l)] = true;
  Volume out = vol;
  auto dst = out.voxels();
  const auto lab = lobes.voxels();
  for (std::size_t i = 0; i < dst.size(); ++i)
    if (!kept[lab[i]]) dst[i] = fill;
  return out;
}

}  // namespace exact
