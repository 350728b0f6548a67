#pragma once

#include <algorithm>
#include <vector>

#include "exact/voxel/image.hpp"
#include "exact/voxel/sample.hpp"

namespace exact {

struct PatchWindow {
  Index3 start{0, 0, 0};
  Index3 size{1, 1, 1};

  BBox3 box() const {
    return {start, {start[0] + size[0], start[1] + size[1], start[2] + size[2]}};
  }
  bool operator==(const PatchWindow&) const = default;
};

/// Window start positions along one axis: multiples of stride, with the last
/// one clamped so the window ends at the axis end. An axis shorter than the
/// patch gets a single window over the zero-padded extent.
inline std::vector<int> patch_starts(int dim, int patch, int stride) {
  require(dim >= 1 && patch >= 1 && stride >= 1, Errc::invalid_argument,
          "patch geometry requires dims, patch and stride >= 1");
  if (dim <= patch) return {0};
  std::vector<int> starts;
  for (int s = 0;; s += stride) {
    if (s + patch >= dim) {
      starts.push_back(dim - patch);
      break;
    }
    starts.push_back(s);
  }
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
  return starts;
}

/// Tiling windows in lexicographic (z, y, x) order; every voxel is covered.
inline std::vector<PatchWindow> sliding_patches(const Index3& dims, const Index3& patch, const Index3& stride) {
  const auto zs = patch_starts(dims[0], patch[0], stride[0]);
  const auto ys = patch_starts(dims[1], patch[1], stride[1]);
  const auto xs = patch_starts(dims[2], patch[2], stride[2]);
  std::vector<PatchWindow> out;
  out.reserve(zs.size() * ys.size() * xs.size());
  for (int z : zs)
    for (int y : ys)
      for (int x : xs) out.push_back({{z, y, x}, patch});
  return out;
}

/// Copies the box [start, start+size) out of `img`, filling out-of-grid voxels
/// with `pad`. The result keeps spacing and is positioned in world space.
template <class T>
Image<T> extract_box(const Image<T>& img, const Index3& start, const Index3& size, T pad) {
  const Vec3 origin = img.world_of({double(start[0]), double(start[1]), double(start[2])});
  Image<T> out(Geometry{size, img.spacing(), origin}, pad);
  const auto& d = img.dims();
  const int x0 = std::max(0, start[2]);
  const int x1 = std::min(d[2], start[2] + size[2]);
  if (x1 <= x0) return out;
  for (int z = 0; z < size[0]; ++z) {
    const int sz = start[0] + z;
    if (sz < 0 || sz >= d[0]) continue;
    for (int y = 0; y < size[1]; ++y) {
      const int sy = start[1] + y;
      if (sy < 0 || sy >= d[1]) continue;
      const T* src = &img(sz, sy, x0);
      std::copy(src, src + (x1 - x0), &out(z, y, x0 - start[2]));
    }
  }
  return out;
}

/// Start index of a crop of `size` centred on `center`; even sizes put the
/// centre at index size/2 of the crop.
inline Index3 crop_start(const Index3& center, const Index3& size) {
  return {center[0] - size[0] / 2, center[1] - size[1] / 2, center[2] - size[2] / 2};
}

template <class T>
Image<T> crop_patch(const Image<T>& vol, const Index3& center, const Index3& size,
                    T pad = default_pad_value<T>()) {
  for (int a = 0; a < 3; ++a) {
    require(size[a] >= 1, Errc::invalid_argument, "crop size must be >= 1");
    require(center[a] >= -size[a] && center[a] < vol.dims()[a] + size[a], Errc::out_of_range,
            "crop center " + to_string(center) + " too far outside the volume");
  }
  return extract_box(vol, crop_start(center, size), size, pad);
}

}  // namespace exact
