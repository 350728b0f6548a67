#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "exact/core/error.hpp"
#include "exact/voxel/geometry.hpp"
#include "exact/voxel/image.hpp"

namespace exact::metrics {

// -- Segmentation overlap ----------------------------------------------------

struct OverlapCounts {
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::int64_t both = 0;
};

inline OverlapCounts overlap_counts(const Mask& a, const Mask& b) {
  require_same_geometry(a, b, "dsc: mask geometry differs");
  OverlapCounts c;
  const auto va = a.voxels();
  const auto vb = b.voxels();
  for (std::size_t i = 0; i < va.size(); ++i) {
    const bool ia = va[i] != 0, ib = vb[i] != 0;
    c.a += ia;
    c.b += ib;
    c.both += ia && ib;
  }
  return c;
}

/// Dice similarity 2|a&b| / (|a|+|b|). Two empty masks agree perfectly (1.0).
inline double dsc(const Mask& a, const Mask& b) {
  const auto c = overlap_counts(a, b);
  if (c.a + c.b == 0) return 1.0;
  return 2.0 * static_cast<double>(c.both) / static_cast<double>(c.a + c.b);
}

/// |a&b| / (|a|+|b|) without the factor 2, kept as a diagnostic; it tops out
/// at 0.5 for identical masks.
inline double overlap_quotient_unscaled(const Mask& a, const Mask& b) {
  const auto c = overlap_counts(a, b);
  if (c.a + c.b == 0) return 0.5;
  return static_cast<double>(c.both) / static_cast<double>(c.a + c.b);
}

inline double iou3d(const BBox3& a, const BBox3& b) {
  const std::int64_t inter = intersection_volume(a, b);
  const std::int64_t uni = a.volume() + b.volume() - inter;
  if (uni <= 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

// -- Detection matching ------------------------------------------------------

struct Detection {
  BBox3 box;
  double score = 0.0;
};

struct MatchPair {
  std::size_t det = 0;
  std::size_t gt = 0;
  double iou = 0.0;
};

struct MatchResult {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::vector<MatchPair> pairs;
  /// Per-detection flag in input order; true when matched.
  std::vector<bool> det_matched;
};

/// Detection indices by descending score; equal scores keep input order.
inline std::vector<std::size_t> score_order(const std::vector<Detection>& dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return dets[l].score > dets[r].score; });
  return order;
}

/// Greedy matching: detections in descending score order each take the
/// still-unmatched ground truth of highest IoU when it reaches `iou_thr`
/// (ties to the lower gt index); otherwise they count as false positives.
inline MatchResult match_detections(const std::vector<Detection>& dets, const std::vector<BBox3>& gts,
                                    double iou_thr) {
  require(iou_thr > 0.0 && iou_thr <= 1.0, Errc::invalid_argument, "IoU threshold must lie in (0, 1]");
  MatchResult r;
  r.det_matched.assign(dets.size(), false);
  std::vector<bool> gt_used(gts.size(), false);
  for (std::size_t d : score_order(dets)) {
    double best = -1.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_used[g]) continue;
      const double iou = iou3d(dets[d].box, gts[g]);
      if (iou > best) {
        best = iou;
        best_gt = g;
      }
    }
    if (best_gt < gts.size() && best >= iou_thr) {
      gt_used[best_gt] = true;
      r.det_matched[d] = true;
      r.pairs.push_back({d, best_gt, best});
      ++r.tp;
    } else {
      ++r.fp;
    }
  }
  r.fn = static_cast<std::int64_t>(gts.size()) - r.tp;
  return r;
}

/// Mean over classes of TP / (TP + FP). A class with no detections
/// contributes 0.
inline double class_mean_precision(const std::vector<MatchResult>& per_class) {
  require(!per_class.empty(), Errc::undefined_metric, "precision needs at least one class");
  double s = 0.0;
  for (const auto& m : per_class) {
    const auto denom = m.tp + m.fp;
    s += denom == 0 ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(denom);
  }
  return s / static_cast<double>(per_class.size());
}

/// Detections and ground truth of one image, for pooled AP.
struct ImageDetections {
  std::vector<Detection> dets;
  std::vector<BBox3> gts;
};

/// All-point interpolated average precision pooled over images. Matching is
/// done per image; ranking is global by score (ties by image then input
/// order).
inline double average_precision(const std::vector<ImageDetections>& images, double iou_thr) {
  std::size_t n_gt = 0;
  struct Ranked {
    double score;
    std::size_t image;
    std::size_t index;
    bool tp;
  };
  std::vector<Ranked> ranked;
  for (std::size_t im = 0; im < images.size(); ++im) {
    n_gt += images[im].gts.size();
    const auto m = match_detections(images[im].dets, images[im].gts, iou_thr);
    for (std::size_t d = 0; d < images[im].dets.size(); ++d)
      ranked.push_back({images[im].dets[d].score, im, d, m.det_matched[d]});
  }
  require(n_gt > 0, Errc::undefined_metric, "average precision is undefined without ground truth");
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& l, const Ranked& r) {
    return std::tie(r.score, l.image, l.index) < std::tie(l.score, r.image, r.index);
  });

  std::vector<double> precision, recall;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    tp += ranked[k].tp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
  }
  // Precision envelope: make it non-increasing from the right.
  for (std::size_t k = precision.size(); k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    ap += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return ap;
}

inline double average_precision(const std::vector<Detection>& dets, const std::vector<BBox3>& gts,
                                double iou_thr) {
  return average_precision(std::vector<ImageDetections>{{dets, gts}}, iou_thr);
}

// -- Per-case verdicts -------------------------------------------------------

enum class Verdict { Match, NoFN, NoFP };

constexpr std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Match: return "Match";
    case Verdict::NoFN: return "NoFN";
    case Verdict::NoFP: return "NoFP";
  }
  return "?";
}

/// Table-style rendering: "Yes", "No", "No (FP)".
constexpr std::string_view table_label(Verdict v) noexcept {
  switch (v) {
    case Verdict::Match: return "Yes";
    case Verdict::NoFN: return "No";
    case Verdict::NoFP: return "No (FP)";
  }
  return "?";
}

struct CaseOutcome {
  Verdict verdict = Verdict::Match;
  std::int64_t kept_count = 0;
  std::int64_t gt_count = 0;
  MatchResult match;
};

/// A case matches when every ground truth is found and nothing extra is kept.
/// Missing any ground truth wins over extra detections.
inline CaseOutcome case_outcome(const std::vector<Detection>& kept, const std::vector<BBox3>& gts,
                                double iou_thr) {
  CaseOutcome o;
  o.match = match_detections(kept, gts, iou_thr);
  o.kept_count = static_cast<std::int64_t>(kept.size());
  o.gt_count = static_cast<std::int64_t>(gts.size());
  if (o.match.fn > 0) {
    o.verdict = Verdict::NoFN;
  } else if (o.match.fp > 0) {
    o.verdict = Verdict::NoFP;
  } else {
    o.verdict = Verdict::Match;
  }
  return o;
}

/// Relative improvement 100 * (guided - unguided) / unguided.
inline double boost_percent(std::int64_t unguided_matches, std::int64_t guided_matches, std::int64_t n_cases) {
  require(n_cases >= 1, Errc::invalid_argument, "boost needs at least one case");
  require(unguided_matches >= 0 && guided_matches >= 0 && unguided_matches <= n_cases && guided_matches <= n_cases,
          Errc::invalid_argument, "match counts must lie in [0, n_cases]");
  require(unguided_matches > 0, Errc::undefined_metric, "boost is undefined when the baseline has no matches");
  return 100.0 * static_cast<double>(guided_matches - unguided_matches) / static_cast<double>(unguided_matches);
}

/// Difference of match rates in percentage points.
inline double boost_points(std::int64_t unguided_matches, std::int64_t guided_matches, std::int64_t n_cases) {
  require(n_cases >= 1, Errc::invalid_argument, "boost needs at least one case");
  return 100.0 * static_cast<double>(guided_matches - unguided_matches) / static_cast<double>(n_cases);
}

}  // namespace exact::metrics
