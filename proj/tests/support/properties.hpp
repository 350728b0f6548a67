#pragma once

// Randomized property checks shared by the unit suite and the acceptance
// binary. Each runner reports how many trials it ran and what broke.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "exact/core/rng.hpp"
#include "exact/detect/detector.hpp"
#include "exact/guide/guide.hpp"
#include "exact/metrics/metrics.hpp"
#include "exact/phantom.hpp"
#include "exact/voxel/augment.hpp"
#include "exact/voxel/intensity.hpp"

namespace props {

using namespace exact;

struct Tally {
  std::string name;
  int trials = 0;
  int violations = 0;
  std::string first_failure;

  void check(bool ok, const std::string& what) {
    if (ok) return;
    if (violations++ == 0) first_failure = what;
  }
};

inline BBox3 random_box(Rng& rng, int extent, int max_side) {
  BBox3 b;
  for (int a = 0; a < 3; ++a) {
    const int side = rng.uniform_int(1, max_side);
    b.min[a] = rng.uniform_int(0, extent - side);
    b.max[a] = b.min[a] + side;
  }
  return b;
}

inline std::vector<detect::Candidate> random_candidates(Rng& rng, int n) {
  std::vector<detect::Candidate> out;
  for (int i = 0; i < n; ++i) {
    const BBox3 b = random_box(rng, 40, 8);
    // Coarse scores so ties occur.
    out.push_back({b, rng.uniform_int(0, 10) / 10.0, {0.5 * (b.min[0] + b.max[0]), 0.5 * (b.min[1] + b.max[1]),
                                                      0.5 * (b.min[2] + b.max[2])}});
  }
  return out;
}

inline std::vector<guide::LobeAssignment> random_assignments(Rng& rng, std::size_t n) {
  std::vector<guide::LobeAssignment> out;
  for (std::size_t i = 0; i < n; ++i) {
    guide::LobeAssignment a;
    a.index = i;
    const int pick = rng.uniform_int(0, 5);
    if (pick > 0) {
      a.lobe = static_cast<LobeId>(pick);
      a.overlap_fraction = rng.uniform(0.01, 1.0);
    }
    out.push_back(a);
  }
  return out;
}

inline TumorPhenotype random_phenotype(Rng& rng) {
  TumorPhenotype p;
  const int mask = rng.uniform_int(1, 31);
  for (int b = 0; b < 5; ++b)
    if (mask & (1 << b)) p.lobes.insert(kAllLobes[b]);
  return p;
}

/// kept, removed and discarded are an order-preserving partition of the
/// input, and each candidate lands in the list its lobe dictates.
inline Tally filter_partition(int trials, std::uint64_t seed) {
  Tally t{"filter partition"};
  Rng rng(seed);
  for (int k = 0; k < trials; ++k, ++t.trials) {
    const auto cands = random_candidates(rng, rng.uniform_int(0, 20));
    const auto assigns = random_assignments(rng, cands.size());
    std::optional<TumorPhenotype> pheno;
    if (rng.bernoulli(0.7)) pheno = random_phenotype(rng);
    const auto r = guide::filter_candidates(cands, assigns, pheno);
    std::vector<detect::Candidate> kept, removed, discarded;
    std::vector<LobeId> kept_lobes;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (!assigns[i].lobe) {
        discarded.push_back(cands[i]);
      } else if (pheno && !pheno->lobes.count(*assigns[i].lobe)) {
        removed.push_back(cands[i]);
      } else {
        kept.push_back(cands[i]);
        kept_lobes.push_back(*assigns[i].lobe);
      }
    }
    t.check(r.kept == kept && r.removed_by_phenotype == removed && r.discarded_no_lobe == discarded &&
                r.kept_lobes == kept_lobes,
            "trial " + std::to_string(k) + ": partition differs from the reference split");
    t.check(r.kept.size() + r.removed_by_phenotype.size() + r.discarded_no_lobe.size() == cands.size(),
            "trial " + std::to_string(k) + ": sizes do not add up");
  }
  return t;
}

/// Guided kept set is a subset of the unguided one and never drops a
/// candidate whose lobe the phenotype lists.
inline Tally guided_subset(int trials, std::uint64_t seed) {
  Tally t{"guided subset of unguided"};
  Rng rng(seed);
  for (int k = 0; k < trials; ++k, ++t.trials) {
    const auto cands = random_candidates(rng, rng.uniform_int(0, 20));
    const auto assigns = random_assignments(rng, cands.size());
    const auto pheno = random_phenotype(rng);
    const auto g = guide::filter_candidates(cands, assigns, pheno);
    const auto u = guide::filter_candidates(cands, assigns, std::nullopt);
    bool subset = true;
    for (const auto& c : g.kept) subset = subset && std::find(u.kept.begin(), u.kept.end(), c) != u.kept.end();
    t.check(subset, "trial " + std::to_string(k) + ": guided kept a candidate unguided did not");
    std::size_t in_pheno = 0;
    for (const auto& a : assigns) in_pheno += a.lobe && pheno.lobes.count(*a.lobe);
    t.check(g.kept.size() == in_pheno, "trial " + std::to_string(k) + ": guided dropped an in-phenotype candidate");
  }
  return t;
}

inline double recall_at(const std::vector<metrics::Detection>& dets, const std::vector<BBox3>& gts, double thr) {
  std::vector<metrics::Detection> kept;
  for (const auto& d : dets)
    if (d.score >= thr) kept.push_back(d);
  const auto m = metrics::match_detections(kept, gts, 0.5);
  return gts.empty() ? 1.0 : static_cast<double>(m.tp) / static_cast<double>(gts.size());
}

/// Raising the score threshold never raises recall. Synthetic trials drive
/// the greedy matcher directly; `detector_cases` extra trials sweep the
/// reference detector's classifier threshold on random phantom cases.
inline Tally threshold_monotone(int trials, std::uint64_t seed, int detector_cases = 0) {
  Tally t{"threshold-monotone recall"};
  Rng rng(seed);
  const std::vector<double> thresholds{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  for (int k = 0; k < trials; ++k, ++t.trials) {
    std::vector<BBox3> gts;
    const int n_gt = rng.uniform_int(1, 4);
    for (int i = 0; i < n_gt; ++i) gts.push_back(random_box(rng, 32, 6));
    std::vector<metrics::Detection> dets;
    for (const auto& g : gts) {
      BBox3 b = g;
      const int shift = rng.uniform_int(-1, 1);
      for (int a = 0; a < 3; ++a) b.min[a] += shift, b.max[a] += shift;
      dets.push_back({b, rng.uniform_int(0, 10) / 10.0});
    }
    for (int i = rng.uniform_int(0, 4); i > 0; --i) dets.push_back({random_box(rng, 32, 6), rng.uniform_int(0, 10) / 10.0});
    double prev = 2.0;
    for (double thr : thresholds) {
      const double r = recall_at(dets, gts, thr);
      t.check(r <= prev + 1e-12, "trial " + std::to_string(k) + ": recall rose at threshold " + std::to_string(thr));
      prev = r;
    }
  }
  if (detector_cases > 0) {
    const auto cohort = phantom::random_cohort_spec(static_cast<std::size_t>(detector_cases), seed);
    for (std::size_t i = 0; i < cohort.cases.size(); ++i, ++t.trials) {
      const auto c = phantom::generate_case(cohort.cases[i], phantom::case_seed(seed, i));
      const auto gts = c.gt_box_list();
      double prev = 2.0;
      for (double thr : {0.0, 0.5, 0.9}) {
        detect::DetectorConfig cfg;
        cfg.classifier_threshold = thr;
        const double r = recall_at(detect::as_detections(detect::detect_candidates(c.volume, cfg)), gts, 0.0);
        t.check(r <= prev + 1e-12, "case " + c.case_id() + ": detector recall rose at threshold " + std::to_string(thr));
        prev = r;
      }
    }
  }
  return t;
}

inline Volume random_volume(Rng& rng, int max_side) {
  const Index3 d{rng.uniform_int(1, max_side), rng.uniform_int(1, max_side), rng.uniform_int(1, max_side)};
  Volume v(Geometry{d, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}});
  for (float& f : v.voxels()) f = static_cast<float>(rng.uniform(-2000.0, 2000.0));
  return v;
}

/// Flipping the same axes twice restores image and mask, and one flip puts
/// every voxel at its mirrored index.
inline Tally flip_involution(int trials, std::uint64_t seed) {
  Tally t{"flip involution"};
  Rng rng(seed);
  for (int k = 0; k < trials; ++k, ++t.trials) {
    const Volume v = random_volume(rng, 12);
    Mask m(v.geometry(), 0);
    for (auto& b : m.voxels()) b = static_cast<std::uint8_t>(rng.uniform_int(0, 1));
    AugSpec spec;
    spec.flip_probability = 1.0;
    for (auto& f : spec.flip_axes) f = rng.bernoulli(0.5);
    const std::uint64_t s = rng.next();
    const auto [v1, m1] = apply_augmentation(v, m, spec, s);
    const auto [v2, m2] = apply_augmentation(v1, m1, spec, s);
    t.check(v2 == v && m2 == m, "trial " + std::to_string(k) + ": double flip is not the identity");
    const auto& d = v.dims();
    bool mirrored = true;
    for (int z = 0; z < d[0]; ++z)
      for (int y = 0; y < d[1]; ++y)
        for (int x = 0; x < d[2]; ++x) {
          const int fz = spec.flip_axes[0] ? d[0] - 1 - z : z;
          const int fy = spec.flip_axes[1] ? d[1] - 1 - y : y;
          const int fx = spec.flip_axes[2] ? d[2] - 1 - x : x;
          mirrored = mirrored && v1(fz, fy, fx) == v(z, y, x) && m1(fz, fy, fx) == m(z, y, x);
        }
    t.check(mirrored, "trial " + std::to_string(k) + ": flipped voxel not at its mirrored index");
  }
  return t;
}

/// clip(clip(v)) == clip(v), and every output lies within the range.
inline Tally clip_idempotence(int trials, std::uint64_t seed) {
  Tally t{"clip idempotence"};
  Rng rng(seed);
  for (int k = 0; k < trials; ++k, ++t.trials) {
    const Volume v = random_volume(rng, 10);
    float lo = static_cast<float>(rng.uniform(-1500.0, 500.0));
    float hi = static_cast<float>(rng.uniform(-1500.0, 1500.0));
    if (lo > hi) std::swap(lo, hi);
    if (lo == hi) hi = lo + 1.0f;
    if (k % 4 == 0) lo = kClipLowHu, hi = kClipHighHu;
    const Volume once = clip_intensity(v, lo, hi);
    t.check(clip_intensity(once, lo, hi) == once, "trial " + std::to_string(k) + ": second clip changed the volume");
    bool in_range = true;
    for (float f : once.voxels()) in_range = in_range && f >= lo && f <= hi;
    t.check(in_range, "trial " + std::to_string(k) + ": clipped value outside the range");
  }
  return t;
}

/// The whole suite; `detector_cases` adds slower detector sweeps.
inline std::vector<Tally> run_all(std::uint64_t seed, int detector_cases = 2) {
  return {filter_partition(300, seed + 1), guided_subset(300, seed + 2),
          threshold_monotone(250, seed + 3, detector_cases), flip_involution(100, seed + 4),
          clip_idempotence(100, seed + 5)};
}

}  // namespace props
