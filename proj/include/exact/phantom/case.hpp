#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "exact/core/rng.hpp"
#include "exact/phantom/anatomy.hpp"
#include "exact/phantom/report.hpp"
#include "exact/phantom/spec.hpp"
#include "exact/voxel/components.hpp"
#include "exact/voxel/intensity.hpp"

namespace exact::phantom {

inline std::string describe_nodule(std::size_t index, const NoduleSpec& n) {
  return "nodule #" + std::to_string(index) + " (" + std::string(to_string(n.kind)) + " in " +
         std::string(to_string(n.lobe)) + ")";
}

/// Geometry of the spec's nodules resolved against a rasterized lobe map.
struct ResolvedNodules {
  std::vector<Vec3> centers;
};

/// Validates nodule placement: every center and every sphere voxel must carry
/// the named lobe label, and spheres must keep at least `min_gap_mm` apart.
inline ResolvedNodules resolve_nodules(const CaseSpec& spec, const LobeLabelMap& lobes, double min_gap_mm = 2.0) {
  const auto boxes = lobe_boxes(lobes);
  ResolvedNodules out;
  for (std::size_t i = 0; i < spec.nodules.size(); ++i) {
    const auto& n = spec.nodules[i];
    const auto& box = boxes[label_of(n.lobe)];
    require(box.has_value(), Errc::generation, describe_nodule(i, n) + ": lobe rasterized empty");
    Vec3 c;
    for (int a = 0; a < 3; ++a) {
      require(n.center_frac[a] >= 0.0 && n.center_frac[a] <= 1.0, Errc::generation,
              describe_nodule(i, n) + ": center fraction outside [0, 1]");
      c[a] = box->min[a] + n.center_frac[a] * (box->max[a] - 1 - box->min[a]);
    }
    const Index3 ci{static_cast<int>(std::lround(c[0])), static_cast<int>(std::lround(c[1])),
                    static_cast<int>(std::lround(c[2]))};
    require(lobes.in_bounds(ci) && lobes[ci] == label_of(n.lobe), Errc::generation,
            describe_nodule(i, n) + ": center falls outside its lobe");
    const int r = static_cast<int>(std::ceil(n.radius_mm));
    for (int z = ci[0] - r - 1; z <= ci[0] + r + 1; ++z)
      for (int y = ci[1] - r - 1; y <= ci[1] + r + 1; ++y)
        for (int x = ci[2] - r - 1; x <= ci[2] + r + 1; ++x) {
          const double dz = z - c[0], dy = y - c[1], dx = x - c[2];
          if (dz * dz + dy * dy + dx * dx > n.radius_mm * n.radius_mm) continue;
          require(lobes.in_bounds(z, y, x) && lobes(z, y, x) == label_of(n.lobe), Errc::generation,
                  describe_nodule(i, n) + ": sphere extends outside its lobe");
        }
    for (std::size_t j = 0; j < out.centers.size(); ++j) {
      const auto& o = out.centers[j];
      const double dist = std::hypot(c[0] - o[0], c[1] - o[1], c[2] - o[2]);
      require(dist >= n.radius_mm + spec.nodules[j].radius_mm + min_gap_mm, Errc::generation,
              describe_nodule(i, n) + ": too close to " + describe_nodule(j, spec.nodules[j]));
    }
    out.centers.push_back(c);
  }
  return out;
}

inline void validate_case_spec(const CaseSpec& spec) {
  require(!spec.case_id.empty(), Errc::generation, "case id must not be empty");
  bool has_tumor = false;
  for (std::size_t i = 0; i < spec.nodules.size(); ++i) {
    const auto& n = spec.nodules[i];
    has_tumor = has_tumor || is_tumor(n.kind);
    require(n.radius_mm > 0.0, Errc::generation, describe_nodule(i, n) + ": radius must be > 0");
    if (n.kind != NoduleKind::suppressed_tumor)
      require(n.radius_mm >= 2.0, Errc::generation, describe_nodule(i, n) + ": detectable nodules need radius >= 2 mm");
  }
  require(has_tumor, Errc::generation, "case " + spec.case_id + " has no tumor");
  require(spec.noise_sigma >= 0.0, Errc::generation, "noise sigma must be >= 0");
  for (const auto& s : spec.lymph_stations)
    require(canonical_station(s).has_value(), Errc::generation, "invalid lymph station '" + s + "'");
}

inline Mask sphere_mask(const Geometry& g, const Vec3& c, double radius) {
  Mask m(g, 0);
  const int r = static_cast<int>(std::ceil(radius)) + 1;
  for (int z = static_cast<int>(c[0]) - r; z <= static_cast<int>(c[0]) + r; ++z)
    for (int y = static_cast<int>(c[1]) - r; y <= static_cast<int>(c[1]) + r; ++y)
      for (int x = static_cast<int>(c[2]) - r; x <= static_cast<int>(c[2]) + r; ++x) {
        if (!m.in_bounds(z, y, x)) continue;
        const double dz = z - c[0], dy = y - c[1], dx = x - c[2];
        if (dz * dz + dy * dy + dx * dx <= radius * radius) m(z, y, x) = 1;
      }
  return m;
}

/// Seed for a case's report wording, derived from its volume seed.
constexpr std::uint64_t report_style_seed(std::uint64_t case_seed) noexcept { return case_seed ^ 0x5eed5eed5eedULL; }

/// Builds one synthetic patient. Pure function of (spec, seed).
inline CohortCase generate_case(const CaseSpec& spec, std::uint64_t seed) {
  validate_case_spec(spec);
  CohortCase out;
  out.spec = spec;
  out.seed = seed;
  out.lobes = rasterize_lobes(spec.anatomy);
  out.nodule_centers = resolve_nodules(spec, out.lobes).centers;

  Volume vol = rasterize_tissue(spec.anatomy, out.lobes);
  for (std::size_t i = 0; i < spec.nodules.size(); ++i) {
    const auto& n = spec.nodules[i];
    const Mask sphere = sphere_mask(vol.geometry(), out.nodule_centers[i], n.radius_mm);
    auto dst = vol.voxels();
    const auto src = sphere.voxels();
    for (std::size_t k = 0; k < dst.size(); ++k)
      if (src[k]) dst[k] = static_cast<float>(kLungHu + n.contrast_hu);
    if (is_tumor(n.kind)) {
      const auto boxes = mask_to_bboxes(sphere, Connectivity::twenty_six);
      require(boxes.size() == 1, Errc::generation, describe_nodule(i, n) + ": rasterized to " +
                                                       std::to_string(boxes.size()) + " components");
      out.gt_masks.push_back(sphere);
      out.gt_boxes.push_back({boxes.front(), n.lobe});
    }
  }
  if (spec.noise_sigma > 0.0) {
    Rng rng(seed);
    for (float& v : vol.voxels()) v = static_cast<float>(v + rng.normal(0.0, spec.noise_sigma));
  }
  out.volume = clip_intensity(vol, kClipLowHu, kClipHighHu);
  out.phenotype_gt = phenotype_of(spec);
  out.report = generate_report(spec, report_style_seed(seed));
  return out;
}

}  // namespace exact::phantom
