#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "exact/voxel/image.hpp"

namespace exact {

enum class Connectivity { six = 6, twenty_six = 26 };

inline Connectivity connectivity_from_int(int n) {
  if (n == 6) return Connectivity::six;
  if (n == 26) return Connectivity::twenty_six;
  fail(Errc::invalid_argument, "connectivity must be 6 or 26, got " + std::to_string(n));
}

struct Component {
  int label = 0;  // 1-based, matches ComponentMap::labels
  BBox3 box;
  std::int64_t voxel_count = 0;
  Vec3 centroid{0.0, 0.0, 0.0};
};

struct ComponentMap {
  Image<std::int32_t> labels;  // 0 = background
  std::vector<Component> components;
};

namespace detail {
inline std::vector<Index3> neighbor_offsets(Connectivity conn) {
  std::vector<Index3> offs;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int manhattan = std::abs(dz) + std::abs(dy) + std::abs(dx);
        if (manhattan == 0) continue;
        if (conn == Connectivity::six && manhattan != 1) continue;
        offs.push_back({dz, dy, dx});
      }
  return offs;
}
}  // namespace detail

/// Labels foreground (nonzero) voxels by breadth-first flood fill. Labels are
/// assigned in raster order of each component's first voxel.
template <class T>
ComponentMap label_components(const Image<T>& mask, Connectivity conn) {
  ComponentMap out{mask.template like<std::int32_t>(0), {}};
  const auto offs = detail::neighbor_offsets(conn);
  const auto& d = mask.dims();
  const auto src = mask.voxels();
  auto lab = out.labels.voxels();
  std::vector<std::size_t> queue;
  for (std::size_t seed = 0; seed < src.size(); ++seed) {
    if (src[seed] == T{0} || lab[seed] != 0) continue;
    const int label = static_cast<int>(out.components.size()) + 1;
    Component comp;
    comp.label = label;
    const Index3 s = mask.index_of(seed);
    comp.box = BBox3{s, {s[0] + 1, s[1] + 1, s[2] + 1}};
    double sum[3] = {0.0, 0.0, 0.0};
    queue.clear();
    queue.push_back(seed);
    lab[seed] = label;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const Index3 p = mask.index_of(queue[head]);
      for (int a = 0; a < 3; ++a) {
        comp.box.min[a] = std::min(comp.box.min[a], p[a]);
        comp.box.max[a] = std::max(comp.box.max[a], p[a] + 1);
        sum[a] += p[a];
      }
      for (const auto& o : offs) {
        const int z = p[0] + o[0], y = p[1] + o[1], x = p[2] + o[2];
        if (z < 0 || y < 0 || x < 0 || z >= d[0] || y >= d[1] || x >= d[2]) continue;
        const std::size_t n = mask.offset(z, y, x);
        if (src[n] == T{0} || lab[n] != 0) continue;
        lab[n] = label;
        queue.push_back(n);
      }
    }
    comp.voxel_count = static_cast<std::int64_t>(queue.size());
    for (int a = 0; a < 3; ++a) comp.centroid[a] = sum[a] / static_cast<double>(comp.voxel_count);
    out.components.push_back(comp);
  }
  return out;
}

/// One tight box per connected foreground component, sorted by min corner
/// (then max corner).
inline std::vector<BBox3> mask_to_bboxes(const Mask& mask, Connectivity conn = Connectivity::twenty_six) {
  const auto cm = label_components(mask, conn);
  std::vector<BBox3> boxes;
  boxes.reserve(cm.components.size());
  for (const auto& c : cm.components) boxes.push_back(c.box);
  std::sort(boxes.begin(), boxes.end());
  return boxes;
}

}  // namespace exact
