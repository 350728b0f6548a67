#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "exact/metrics/metrics.hpp"
#include "exact/voxel/components.hpp"
#include "exact/voxel/image.hpp"
#include "exact/voxel/patches.hpp"

namespace exact::detect {

struct DetectorConfig {
  float hu_threshold = -300.0f;
  double min_volume_mm3 = 14.0;     // ~3 mm sphere
  double max_volume_mm3 = 1.4e5;
  double classifier_threshold = 0.5;
  double nms_iou = 0.1;
  Index3 detect_patch{96, 96, 96};
  Index3 segment_patch{64, 64, 64};
  /// Lung-density context: voxels whose 5 mm box mean lies inside
  /// (context_min_hu, context_max_hu), plus whatever they enclose.
  double context_window_mm = 5.0;
  float context_min_hu = -950.0f;
  float context_max_hu = -400.0f;
  /// Fraction of a component's voxels that must lie in lung context.
  double context_fraction = 0.5;
  /// Contrast mapped to a score of 1.
  double score_contrast_hu = 600.0;

  void validate() const {
    require(min_volume_mm3 < max_volume_mm3, Errc::invalid_argument, "min_volume must be < max_volume");
    require(min_volume_mm3 >= 0.0, Errc::invalid_argument, "min_volume must be >= 0");
    require(classifier_threshold >= 0.0 && classifier_threshold <= 1.0, Errc::invalid_argument,
            "classifier threshold must lie in [0, 1]");
    require(nms_iou > 0.0 && nms_iou <= 1.0, Errc::invalid_argument, "nms IoU must lie in (0, 1]");
    for (int a = 0; a < 3; ++a)
      require(detect_patch[a] >= 2 && segment_patch[a] >= 1, Errc::invalid_argument, "patch sizes must be positive");
    require(context_window_mm > 0.0 && context_min_hu < context_max_hu, Errc::invalid_argument,
            "context window must be positive and ordered");
    require(context_fraction >= 0.0 && context_fraction <= 1.0, Errc::invalid_argument,
            "context fraction must lie in [0, 1]");
    require(score_contrast_hu > 0.0, Errc::invalid_argument, "score contrast must be > 0");
  }
};

struct Candidate {
  BBox3 box;
  double score = 0.0;
  Vec3 centroid{0.0, 0.0, 0.0};  // voxel coordinates

  bool operator==(const Candidate&) const = default;
};

inline std::vector<metrics::Detection> as_detections(const std::vector<Candidate>& cands) {
  std::vector<metrics::Detection> out;
  out.reserve(cands.size());
  for (const auto& c : cands) out.push_back({c.box, c.score});
  return out;
}

/// Greedy suppression in descending score order (ties by box min corner): a
/// candidate is dropped when its IoU with an already kept one exceeds
/// `iou_thr`.
inline std::vector<Candidate> nms(std::vector<Candidate> cands, double iou_thr) {
  require(iou_thr > 0.0 && iou_thr <= 1.0, Errc::invalid_argument, "nms IoU must lie in (0, 1]");
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& l, const Candidate& r) {
    if (l.score != r.score) return l.score > r.score;
    return l.box < r.box;
  });
  std::vector<Candidate> kept;
  for (const auto& c : cands) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(),
                                        [&](const Candidate& k) { return metrics::iou3d(k.box, c.box) > iou_thr; });
    if (!suppressed) kept.push_back(c);
  }
  return kept;
}

namespace detail {

/// Mean over a clamped (2h+1)^3 box, one separable pass per axis.
inline Image<float> box_mean(const Volume& vol, const Index3& half) {
  Image<double> sum(vol.geometry(), 0.0);
  Image<double> cnt(vol.geometry(), 1.0);
  {
    auto s = sum.voxels();
    const auto v = vol.voxels();
    for (std::size_t i = 0; i < v.size(); ++i) s[i] = v[i];
  }
  const auto& d = vol.dims();
  for (int axis = 0; axis < 3; ++axis) {
    const int h = half[axis];
    if (h == 0) continue;
    Image<double> ns(vol.geometry(), 0.0), nc(vol.geometry(), 0.0);
    for (int z = 0; z < d[0]; ++z)
      for (int y = 0; y < d[1]; ++y)
        for (int x = 0; x < d[2]; ++x) {
          Index3 p{z, y, x};
          const int c = p[axis];
          double as = 0.0, ac = 0.0;
          for (int t = std::max(0, c - h); t <= std::min(d[axis] - 1, c + h); ++t) {
            p[axis] = t;
            as += sum[p];
            ac += cnt[p];
          }
          ns(z, y, x) = as;
          nc(z, y, x) = ac;
        }
    sum = std::move(ns);
    cnt = std::move(nc);
  }
  Image<float> out(vol.geometry(), 0.0f);
  auto o = out.voxels();
  const auto s = sum.voxels();
  const auto c = cnt.voxels();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = static_cast<float>(s[i] / c[i]);
  return out;
}

}  // namespace detail

/// Lung field as the detector sees it: voxels of lung-like local density,
/// together with every region they fully enclose (nodules inside the lung).
/// Regions connected to the grid border (outside air, the body wall running
/// off the grid) stay outside.
inline Mask lung_context(const Volume& vol, const DetectorConfig& cfg) {
  Index3 half;
  for (int a = 0; a < 3; ++a)
    half[a] = std::max(0, static_cast<int>(std::floor(cfg.context_window_mm / vol.spacing()[a] / 2.0)));
  const Image<float> mean = detail::box_mean(vol, half);
  Mask outside = vol.like<std::uint8_t>(0);
  {
    auto o = outside.voxels();
    const auto m = mean.voxels();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = !(m[i] > cfg.context_min_hu && m[i] < cfg.context_max_hu);
  }
  const auto cm = label_components(outside, Connectivity::six);
  const auto& d = vol.dims();
  std::vector<bool> touches(cm.components.size() + 1, false);
  for (const auto& c : cm.components)
    for (int a = 0; a < 3; ++a)
      if (c.box.min[a] == 0 || c.box.max[a] == d[a]) touches[c.label] = true;
  Mask context = vol.like<std::uint8_t>(0);
  auto ctx = context.voxels();
  const auto lab = cm.labels.voxels();
  for (std::size_t i = 0; i < ctx.size(); ++i) ctx[i] = !touches[lab[i]];
  return context;
}

/// Candidates from one patch: supra-threshold 26-connected components that
/// do not touch an interior patch face, pass the lung-context gate and fall
/// inside the volume limits. Scores are unfiltered.
inline std::vector<Candidate> patch_candidates(const Volume& vol, const Mask& context, const PatchWindow& w,
                                               const DetectorConfig& cfg) {
  const auto& d = vol.dims();
  Mask fg(Geometry{w.size, vol.spacing(), {0, 0, 0}}, 0);
  for (int z = 0; z < w.size[0]; ++z)
    for (int y = 0; y < w.size[1]; ++y)
      for (int x = 0; x < w.size[2]; ++x) {
        const int gz = w.start[0] + z, gy = w.start[1] + y, gx = w.start[2] + x;
        if (gz >= d[0] || gy >= d[1] || gx >= d[2]) continue;
        fg(z, y, x) = vol(gz, gy, gx) > cfg.hu_threshold;
      }
  const auto cm = label_components(fg, Connectivity::twenty_six);
  const double voxel_mm3 = vol.voxel_volume();

  std::vector<Candidate> out;
  std::vector<std::int64_t> in_context(cm.components.size() + 1, 0);
  std::vector<double> hu_sum(cm.components.size() + 1, 0.0);
  {
    const auto lab = cm.labels.voxels();
    for (std::size_t i = 0; i < lab.size(); ++i) {
      if (lab[i] == 0) continue;
      const Index3 p = cm.labels.index_of(i);
      const Index3 g{w.start[0] + p[0], w.start[1] + p[1], w.start[2] + p[2]};
      in_context[lab[i]] += context[g] != 0;
      hu_sum[lab[i]] += vol[g];
    }
  }
  for (const auto& c : cm.components) {
    bool interior_cut = false;
    for (int a = 0; a < 3; ++a) {
      const bool low_face_interior = w.start[a] > 0;
      const bool high_face_interior = w.start[a] + w.size[a] < d[a];
      if ((low_face_interior && c.box.min[a] == 0) || (high_face_interior && c.box.max[a] == w.size[a]))
        interior_cut = true;
    }
    if (interior_cut) continue;
    if (static_cast<double>(in_context[c.label]) < cfg.context_fraction * static_cast<double>(c.voxel_count)) continue;

    Candidate cand;
    for (int a = 0; a < 3; ++a) {
      cand.box.min[a] = c.box.min[a] + w.start[a];
      cand.box.max[a] = c.box.max[a] + w.start[a];
      cand.centroid[a] = c.centroid[a] + w.start[a];
    }
    const double box_mm3 = static_cast<double>(cand.box.volume()) * voxel_mm3;
    if (box_mm3 < cfg.min_volume_mm3 || box_mm3 > cfg.max_volume_mm3) continue;

    // Local background: sub-threshold lung-context voxels in a 3-voxel rim.
    double bg_sum = 0.0;
    std::int64_t bg_n = 0;
    for (int z = std::max(0, cand.box.min[0] - 3); z < std::min(d[0], cand.box.max[0] + 3); ++z)
      for (int y = std::max(0, cand.box.min[1] - 3); y < std::min(d[1], cand.box.max[1] + 3); ++y)
        for (int x = std::max(0, cand.box.min[2] - 3); x < std::min(d[2], cand.box.max[2] + 3); ++x) {
          const float v = vol(z, y, x);
          if (v <= cfg.hu_threshold && context(z, y, x)) {
            bg_sum += v;
            ++bg_n;
          }
        }
    const double mean_hu = hu_sum[c.label] / static_cast<double>(c.voxel_count);
    cand.score = bg_n == 0 ? 0.0
                           : std::clamp((mean_hu - bg_sum / static_cast<double>(bg_n)) / cfg.score_contrast_hu, 0.0, 1.0);
    out.push_back(cand);
  }
  return out;
}

/// Classical reference detector over a 1 mm isotropic, clipped CT volume.
inline std::vector<Candidate> detect_candidates(const Volume& vol, const DetectorConfig& cfg = {}) {
  cfg.validate();
  require(vol.geometry().isotropic(1e-6), Errc::invalid_argument, "detector expects an isotropic volume");
  const Mask context = lung_context(vol, cfg);
  const Index3 stride{std::max(1, cfg.detect_patch[0] / 2), std::max(1, cfg.detect_patch[1] / 2),
                      std::max(1, cfg.detect_patch[2] / 2)};
  std::vector<Candidate> all;
  for (const auto& w : sliding_patches(vol.dims(), cfg.detect_patch, stride)) {
    auto part = patch_candidates(vol, context, w, cfg);
    all.insert(all.end(), part.begin(), part.end());
  }
  auto merged = nms(std::move(all), cfg.nms_iou);
  std::erase_if(merged, [&](const Candidate& c) { return c.score < cfg.classifier_threshold; });
  return merged;
}

/// Delineates one candidate inside a segment_patch crop around its centroid:
/// the supra-threshold component containing the crop centre, or the one
/// nearest to it. The mask is returned on the full volume grid.
inline Mask segment_candidate(const Volume& vol, const Candidate& cand, const DetectorConfig& cfg = {}) {
  cfg.validate();
  const Index3 center{static_cast<int>(std::lround(cand.centroid[0])), static_cast<int>(std::lround(cand.centroid[1])),
                      static_cast<int>(std::lround(cand.centroid[2]))};
  require(vol.in_bounds(center), Errc::out_of_range, "candidate centroid " + to_string(center) + " outside volume");
  const Index3 start = crop_start(center, cfg.segment_patch);
  const Volume patch = extract_box(vol, start, cfg.segment_patch, -1000.0f);
  Mask fg = patch.like<std::uint8_t>(0);
  {
    auto f = fg.voxels();
    const auto p = patch.voxels();
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = p[i] > cfg.hu_threshold;
  }
  Mask out = vol.like<std::uint8_t>(0);
  const auto cm = label_components(fg, Connectivity::twenty_six);
  if (cm.components.empty()) return out;

  const Index3 local{center[0] - start[0], center[1] - start[1], center[2] - start[2]};
  int chosen = cm.labels[local];
  if (chosen == 0) {
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    const auto lab = cm.labels.voxels();
    for (std::size_t i = 0; i < lab.size(); ++i) {
      if (lab[i] == 0) continue;
      const Index3 p = cm.labels.index_of(i);
      const std::int64_t dz = p[0] - local[0], dy = p[1] - local[1], dx = p[2] - local[2];
      const std::int64_t dist = dz * dz + dy * dy + dx * dx;
      if (dist < best || (dist == best && lab[i] < chosen)) {
        best = dist;
        chosen = lab[i];
      }
    }
  }
  const auto lab = cm.labels.voxels();
  for (std::size_t i = 0; i < lab.size(); ++i) {
    if (lab[i] != chosen) continue;
    const Index3 p = cm.labels.index_of(i);
    const Index3 g{p[0] + start[0], p[1] + start[1], p[2] + start[2]};
    if (out.in_bounds(g)) out[g] = 1;
  }
  return out;
}

/// Pluggable detector surface used by the pipeline. A learned model can
/// replace the reference implementation without touching guidance logic.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<Candidate> detect(const Volume& vol) const = 0;
  virtual Mask segment(const Volume& vol, const Candidate& cand) const = 0;
  virtual std::string name() const = 0;
};

class ReferenceDetector final : public Detector {
 public:
  explicit ReferenceDetector(DetectorConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  std::vector<Candidate> detect(const Volume& vol) const override { return detect_candidates(vol, cfg_); }
  Mask segment(const Volume& vol, const Candidate& cand) const override { return segment_candidate(vol, cand, cfg_); }
  std::string name() const override { return "reference"; }
  const DetectorConfig& config() const noexcept { return cfg_; }

 private:
  DetectorConfig cfg_;
};

}  // namespace exact::detect
