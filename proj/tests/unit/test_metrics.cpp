#include <gtest/gtest.h>

#include "exact/core/rng.hpp"
#include "exact/metrics/metrics.hpp"
#include "oracles.hpp"

using namespace exact;
using namespace exact::metrics;

namespace {
Mask mask_of(std::initializer_list<Index3> on, Index3 dims = {4, 4, 4}) {
  Mask m(Geometry{dims, {1, 1, 1}, {0, 0, 0}}, 0);
  for (const auto& p : on) m[p] = 1;
  return m;
}
}  // namespace

TEST(Dsc, HandValues) {
  const Mask a = mask_of({{0, 0, 0}, {0, 0, 1}});
  EXPECT_DOUBLE_EQ(dsc(a, a), 1.0);
  EXPECT_DOUBLE_EQ(dsc(a, mask_of({{3, 3, 3}})), 0.0);
  EXPECT_DOUBLE_EQ(dsc(a, mask_of({{0, 0, 1}, {1, 1, 1}})), 0.5);
  EXPECT_DOUBLE_EQ(dsc(mask_of({}), mask_of({})), 1.0);
  EXPECT_DOUBLE_EQ(dsc(a, mask_of({})), 0.0);
  EXPECT_DOUBLE_EQ(overlap_quotient_unscaled(a, mask_of({{0, 0, 1}, {1, 1, 1}})), 0.25);
  EXPECT_THROW(dsc(a, mask_of({}, {4, 4, 5})), Error);
}

TEST(Dsc, MatchesTripleLoopOracleOn200RandomPairs) {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    Mask a(Geometry{{16, 16, 16}, {1, 1, 1}, {0, 0, 0}}, 0), b = a;
    const double pa = rng.uniform(0.0, 0.6), pb = rng.uniform(0.0, 0.6);
    for (auto& v : a.voxels()) v = rng.bernoulli(pa);
    for (auto& v : b.voxels()) v = rng.bernoulli(pb);
    const auto c = oracle::dice_counts_triple_loop(a, b);
    const auto mine = overlap_counts(a, b);
    EXPECT_EQ(mine.both, c.inter);
    EXPECT_EQ(mine.a, c.a);
    EXPECT_EQ(mine.b, c.b);
    const double expect = c.a + c.b == 0 ? 1.0 : 2.0 * c.inter / static_cast<double>(c.a + c.b);
    EXPECT_EQ(dsc(a, b), expect);
    EXPECT_EQ(dsc(a, b), dsc(b, a));
  }
}

TEST(Iou, HandValues) {
  const BBox3 a{{0, 0, 0}, {10, 10, 10}}, b{{5, 5, 5}, {15, 15, 15}};
  EXPECT_DOUBLE_EQ(iou3d(a, a), 1.0);
  EXPECT_DOUBLE_EQ(iou3d(a, BBox3{{20, 20, 20}, {21, 21, 21}}), 0.0);
  EXPECT_NEAR(iou3d(a, b), 125.0 / 1875.0, 1e-9);
  EXPECT_NEAR(iou3d(a, b), 0.066667, 1e-6);
}

TEST(Iou, MatchesRasterOracleOn200RandomPairs) {
  Rng rng(6);
  auto random_box = [&] {
    Index3 lo, hi;
    for (int k = 0; k < 3; ++k) {
      lo[k] = rng.uniform_int(0, 12);
      hi[k] = lo[k] + rng.uniform_int(1, 8);
    }
    return BBox3{lo, hi};
  };
  for (int t = 0; t < 200; ++t) {
    const BBox3 a = random_box(), b = random_box();
    EXPECT_NEAR(iou3d(a, b), oracle::iou_by_voxels(a, b), 1e-9);
    EXPECT_EQ(iou3d(a, b), iou3d(b, a));
  }
}

TEST(Matching, HandCases) {
  const BBox3 g{{0, 0, 0}, {4, 4, 4}};
  auto m = match_detections({{g, 0.9}}, {g}, 0.5);
  EXPECT_EQ(std::tie(m.tp, m.fp, m.fn), std::make_tuple(1, 0, 0));
  m = match_detections({}, {g, BBox3{{9, 9, 9}, {10, 10, 10}}}, 0.5);
  EXPECT_EQ(std::tie(m.tp, m.fp, m.fn), std::make_tuple(0, 0, 2));
  m = match_detections({{g, 0.9}, {BBox3{{20, 20, 20}, {22, 22, 22}}, 0.8}}, {g}, 0.5);
  EXPECT_EQ(std::tie(m.tp, m.fp, m.fn), std::make_tuple(1, 1, 0));
  ASSERT_EQ(m.pairs.size(), 1u);
  EXPECT_EQ(m.pairs[0].det, 0u);
}

TEST(Matching, EqualIouGoesToLowerGtIndex) {
  const BBox3 g0{{0, 0, 0}, {4, 4, 4}}, g1{{2, 0, 0}, {6, 4, 4}}, d{{1, 0, 0}, {5, 4, 4}};
  const auto m = match_detections({{d, 0.5}}, {g0, g1}, 0.5);
  ASSERT_EQ(m.pairs.size(), 1u);
  EXPECT_EQ(m.pairs[0].gt, 0u);
}

TEST(Precision, ClassMeanValues) {
  MatchResult m;
  m.tp = 2;
  m.fp = 1;
  EXPECT_NEAR(class_mean_precision({m}), 0.666667, 1e-6);
  m.tp = 1;
  m.fp = 0;
  EXPECT_DOUBLE_EQ(class_mean_precision({m}), 1.0);
  m.tp = 0;
  EXPECT_DOUBLE_EQ(class_mean_precision({m}), 0.0);
  EXPECT_THROW(class_mean_precision({}), Error);
}

TEST(Precision, ExtraFalsePositiveNeverHelps) {
  Rng rng(8);
  for (int t = 0; t < 200; ++t) {
    MatchResult m;
    m.tp = rng.uniform_int(0, 5);
    m.fp = rng.uniform_int(0, 5);
    MatchResult worse = m;
    ++worse.fp;
    EXPECT_LE(class_mean_precision({worse}), class_mean_precision({m}));
  }
}

TEST(AveragePrecision, HandCases) {
  const BBox3 g{{0, 0, 0}, {4, 4, 4}}, far{{20, 20, 20}, {24, 24, 24}};
  EXPECT_DOUBLE_EQ(average_precision({{g, 0.9}}, {g}, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(average_precision({{g, 0.9}, {far, 0.5}}, {g}, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(average_precision({{far, 0.9}, {g, 0.5}}, {g}, 0.5), 0.5);
  try {
    average_precision({{g, 0.9}}, {}, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::undefined_metric);
  }
}

TEST(MatchingAndAp, AgreeWithExhaustiveEnumeration) {
  const oracle::MatchingWorld w;
  std::size_t mismatches = 0;
  const std::size_t n = w.enumerate(5, [&](const std::vector<Detection>& dets, const std::vector<std::size_t>& box_idx,
                                           std::size_t n_gt) {
    const std::vector<BBox3> gts(w.gt_pool.begin(), w.gt_pool.begin() + static_cast<std::ptrdiff_t>(n_gt));
    std::vector<std::vector<double>> iou;
    for (std::size_t b : box_idx) iou.emplace_back(w.iou[b].begin(), w.iou[b].begin() + static_cast<std::ptrdiff_t>(n_gt));
    for (double thr : {0.5, 0.7}) {
      const auto ref = oracle::greedy_match(dets, gts, thr, iou);
      const auto got = match_detections(dets, gts, thr);
      bool same = ref.tp == got.tp && ref.fp == got.fp && ref.fn == got.fn;
      for (const auto& p : got.pairs) same = same && ref.det_to_gt[p.det] == static_cast<int>(p.gt);
      if (n_gt > 0) same = same && std::abs(average_precision(dets, gts, thr) -
                                            oracle::average_precision_by_curve(dets, ref, n_gt)) < 1e-12;
      mismatches += !same;
    }
  });
  EXPECT_EQ(mismatches, 0u);
  EXPECT_GT(n, 1000000u);
}

TEST(Outcome, Verdicts) {
  const BBox3 g{{0, 0, 0}, {4, 4, 4}}, far{{20, 20, 20}, {24, 24, 24}};
  EXPECT_EQ(case_outcome({{g, 1.0}}, {g}, 0.5).verdict, Verdict::Match);
  EXPECT_EQ(case_outcome({}, {g}, 0.5).verdict, Verdict::NoFN);
  EXPECT_EQ(case_outcome({{g, 1.0}, {far, 1.0}}, {g}, 0.5).verdict, Verdict::NoFP);
  EXPECT_EQ(case_outcome({{far, 1.0}}, {g}, 0.5).verdict, Verdict::NoFN);
  EXPECT_EQ(table_label(Verdict::Match), "Yes");
  EXPECT_EQ(table_label(Verdict::NoFN), "No");
  EXPECT_EQ(table_label(Verdict::NoFP), "No (FP)");
}

TEST(Boost, Values) {
  EXPECT_DOUBLE_EQ(boost_percent(2, 7, 10), 250.0);
  EXPECT_DOUBLE_EQ(boost_percent(4, 4, 10), 0.0);
  EXPECT_DOUBLE_EQ(boost_percent(1, 3, 10), 200.0);
  EXPECT_DOUBLE_EQ(boost_points(2, 7, 10), 50.0);
  try {
    boost_percent(0, 3, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::undefined_metric);
  }
}
