#pragma once
// Independent reference implementations used only by the tests. They favour
// obviousness over speed: voxel rasterization, explicit sorting and direct
// curve enumeration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "exact/core/rng.hpp"
#include "exact/losses/losses.hpp"
#include "exact/metrics/metrics.hpp"

namespace oracle {

using exact::BBox3;
using exact::Index3;

inline std::vector<Index3> rasterize(const BBox3& b) {
  std::vector<Index3> out;
  for (int z = b.min[0]; z < b.max[0]; ++z)
    for (int y = b.min[1]; y < b.max[1]; ++y)
      for (int x = b.min[2]; x < b.max[2]; ++x) out.push_back({z, y, x});
  return out;
}

inline double iou_by_voxels(const BBox3& a, const BBox3& b) {
  const auto va = rasterize(a), vb = rasterize(b);
  std::size_t inter = 0;
  for (const auto& p : va)
    if (b.contains(p)) ++inter;
  const std::size_t uni = va.size() + vb.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

struct DiceCounts {
  std::int64_t inter = 0, a = 0, b = 0;
};

inline DiceCounts dice_counts_triple_loop(const exact::Mask& a, const exact::Mask& b) {
  DiceCounts c;
  const auto& d = a.dims();
  for (int z = 0; z < d[0]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[2]; ++x) {
        const bool ia = a(z, y, x) != 0, ib = b(z, y, x) != 0;
        c.a += ia;
        c.b += ib;
        c.inter += ia && ib;
      }
  return c;
}

struct GreedyResult {
  std::int64_t tp = 0, fp = 0, fn = 0;
  std::vector<int> det_to_gt;  // -1 when unmatched
};

/// Greedy matching spelled out: visit detections by (score desc, index asc)
/// and pick the best unmatched gt whose IoU clears the threshold.
inline GreedyResult greedy_match(const std::vector<exact::metrics::Detection>& dets, const std::vector<BBox3>& gts,
                                 double thr, const std::vector<std::vector<double>>& iou) {
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < dets.size(); ++i) order.push_back({-dets[i].score, i});
  std::sort(order.begin(), order.end());
  GreedyResult r;
  r.det_to_gt.assign(dets.size(), -1);
  std::vector<bool> used(gts.size(), false);
  for (const auto& [neg, d] : order) {
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g]) continue;
      if (iou[d][g] > best_iou) {
        best_iou = iou[d][g];
        best = static_cast<int>(g);
      }
    }
    if (best >= 0 && best_iou >= thr) {
      used[best] = true;
      r.det_to_gt[d] = best;
      ++r.tp;
    } else {
      ++r.fp;
    }
  }
  r.fn = static_cast<std::int64_t>(gts.size()) - r.tp;
  return r;
}

/// All-point interpolated AP: for each rank k where a true positive raises
/// recall, add (recall step) x (best precision at any rank >= k).
inline double average_precision_by_curve(const std::vector<exact::metrics::Detection>& dets,
                                         const GreedyResult& m, std::size_t n_gt) {
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < dets.size(); ++i) order.push_back({-dets[i].score, i});
  std::sort(order.begin(), order.end());
  std::vector<double> prec, rec;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    tp += m.det_to_gt[order[k].second] >= 0;
    prec.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    rec.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
  }
  double ap = 0.0, last = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (rec[k] <= last) continue;
    const double best = *std::max_element(prec.begin() + static_cast<std::ptrdiff_t>(k), prec.end());
    ap += (rec[k] - last) * best;
    last = rec[k];
  }
  return ap;
}

/// Largest relative disagreement between an analytic gradient and central
/// differences of `f` at `x`.
inline double gradient_rel_error(const std::function<double(std::span<const double>)>& f,
                                 const std::vector<double>& analytic, const std::vector<double>& x, double h) {
  const auto numeric = exact::losses::numeric_gradient(f, x, h);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-3});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
  }
  return worst;
}

}  // namespace oracle

namespace oracle {

/// Small box vocabulary for systematic matching/AP enumeration. Detection
/// boxes include exact hits, a box equidistant from two ground truths (IoU
/// tie), partial overlaps and a far-away false positive.
struct MatchingWorld {
  std::vector<BBox3> gt_pool;
  std::vector<BBox3> det_pool;
  std::vector<double> scores{0.9, 0.6, 0.3};
  std::vector<std::vector<double>> iou;  // det_pool x gt_pool, by voxel counting

  MatchingWorld() {
    gt_pool = {BBox3{{0, 0, 0}, {4, 4, 4}}, BBox3{{2, 0, 0}, {6, 4, 4}}, BBox3{{10, 0, 0}, {14, 4, 4}}};
    det_pool = {BBox3{{0, 0, 0}, {4, 4, 4}}, BBox3{{1, 0, 0}, {5, 4, 4}}, BBox3{{11, 0, 0}, {15, 4, 4}},
                BBox3{{30, 0, 0}, {34, 4, 4}}};
    for (const auto& d : det_pool) {
      iou.emplace_back();
      for (const auto& g : gt_pool) iou.back().push_back(iou_by_voxels(d, g));
    }
  }

  /// Calls f(dets, det_pool_indices, n_gt) for every configuration with up to
  /// `max_dets` detections (each any pool box with any score) and up to three
  /// ground truths (prefixes of gt_pool).
  template <class F>
  std::size_t enumerate(int max_dets, F f) const {
    std::size_t count = 0;
    const std::size_t options = det_pool.size() * scores.size();
    for (std::size_t n_gt = 0; n_gt <= gt_pool.size(); ++n_gt) {
      for (int n = 0; n <= max_dets; ++n) {
        std::vector<std::size_t> digits(static_cast<std::size_t>(n), 0);
        while (true) {
          std::vector<exact::metrics::Detection> dets;
          std::vector<std::size_t> box_idx;
          for (std::size_t k : digits) {
            box_idx.push_back(k / scores.size());
            dets.push_back({det_pool[k / scores.size()], scores[k % scores.size()]});
          }
          f(dets, box_idx, n_gt);
          ++count;
          std::size_t pos = 0;
          while (pos < digits.size() && ++digits[pos] == options) digits[pos++] = 0;
          if (pos == digits.size()) break;
        }
      }
    }
    return count;
  }
};

}  // namespace oracle
