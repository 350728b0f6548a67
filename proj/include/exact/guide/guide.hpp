#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "exact/core/phenotype.hpp"
#include "exact/detect/detector.hpp"
#include "exact/extract/backend.hpp"
#include "exact/metrics/metrics.hpp"
#include "exact/phantom/spec.hpp"
#include "exact/voxel/intensity.hpp"
#include "exact/voxel/lobe_mask.hpp"
#include "exact/voxel/resample.hpp"

namespace exact::guide {

using detect::Candidate;

enum class Mode { unguided, guided };

constexpr std::string_view to_string(Mode m) noexcept { return m == Mode::guided ? "guided" : "unguided"; }

inline Mode parse_mode(std::string_view s) {
  if (s == "guided") return Mode::guided;
  if (s == "unguided") return Mode::unguided;
  fail(Errc::invalid_argument, "mode must be 'guided' or 'unguided', got '" + std::string(s) + "'");
}

/// Evaluation IoU for counting a kept candidate as a ground-truth hit.
inline constexpr double kOutcomeIou = 0.5;

struct LobeAssignment {
  std::size_t index = 0;
  std::optional<LobeId> lobe;
  double overlap_fraction = 0.0;  // share of box voxels labelled with `lobe`

  bool operator==(const LobeAssignment&) const = default;
};

/// Lobe with the most labelled voxels inside the candidate box; the smaller
/// lobe id wins ties, and a box touching no lobe gets none.
inline LobeAssignment assign_lobe(const Candidate& cand, const LobeLabelMap& lobes, std::size_t index = 0) {
  const BBox3& b = cand.box;
  require(b.valid(), Errc::invalid_argument, "candidate box is empty");
  for (int a = 0; a < 3; ++a)
    require(b.min[a] >= 0 && b.max[a] <= lobes.dims()[a], Errc::out_of_range,
            "candidate box " + to_string(b) + " exceeds the lobe map extent");
  std::array<std::int64_t, 256> counts{};
  for (int z = b.min[0]; z < b.max[0]; ++z)
    for (int y = b.min[1]; y < b.max[1]; ++y)
      for (int x = b.min[2]; x < b.max[2]; ++x) ++counts[lobes(z, y, x)];
  LobeAssignment out;
  out.index = index;
  std::int64_t best = 0;
  for (LobeId l : kAllLobes) {
    if (counts[label_of(l)] > best) {
      best = counts[label_of(l)];
      out.lobe = l;
    }
  }
  out.overlap_fraction = static_cast<double>(best) / static_cast<double>(b.volume());
  return out;
}

inline std::vector<LobeAssignment> assign_lobes(const std::vector<Candidate>& cands, const LobeLabelMap& lobes) {
  std::vector<LobeAssignment> out;
  out.reserve(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) out.push_back(assign_lobe(cands[i], lobes, i));
  return out;
}

struct FilterResult {
  std::vector<Candidate> kept;
  std::vector<LobeId> kept_lobes;  // aligned with `kept`
  std::vector<Candidate> removed_by_phenotype;
  std::vector<Candidate> discarded_no_lobe;
};

/// Candidates without a lobe are always discarded. With a phenotype, those
/// whose lobe it does not list are removed; without one, the rest are kept.
inline FilterResult filter_candidates(const std::vector<Candidate>& cands, const std::vector<LobeAssignment>& assigns,
                                      const std::optional<TumorPhenotype>& phenotype) {
  require(cands.size() == assigns.size(), Errc::invalid_argument, "candidates and assignments differ in length");
  if (phenotype)
    require(!phenotype->lobes.empty(), Errc::empty_phenotype, "guided filtering needs at least one tumor lobe");
  FilterResult out;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto& lobe = assigns[i].lobe;
    if (!lobe) {
      out.discarded_no_lobe.push_back(cands[i]);
    } else if (phenotype && !phenotype->lobes.count(*lobe)) {
      out.removed_by_phenotype.push_back(cands[i]);
    } else {
      out.kept.push_back(cands[i]);
      out.kept_lobes.push_back(*lobe);
    }
  }
  return out;
}

/// Preprocessed inputs plus raw detections. Both modes share one stage, so
/// the comparison runs the detector once per case.
struct DetectionStage {
  Volume volume;
  LobeLabelMap lobes;
  std::vector<Candidate> candidates;
  std::vector<LobeAssignment> assignments;
};

struct CaseResult {
  std::string case_id;
  Mode mode = Mode::unguided;
  std::int64_t detected = 0;
  std::int64_t removed = 0;
  std::int64_t discarded_no_lobe = 0;
  std::vector<Candidate> kept;
  std::vector<LobeId> kept_lobes;
  std::vector<Mask> masks;  // one per kept candidate; callers may drop them to save memory
  std::vector<std::int64_t> mask_voxels;
  std::optional<TumorPhenotype> phenotype;
  std::vector<BBox3> gt_boxes;
  metrics::CaseOutcome outcome;
  std::vector<double> matched_dsc;  // DSC of each matched kept mask against its ground truth
};

/// Resamples to 1 mm when needed and clips intensities.
inline std::pair<Volume, LobeLabelMap> preprocess(const Volume& vol, const LobeLabelMap& lobes) {
  require_same_geometry(vol, lobes, "preprocess: volume and lobe map geometry differ");
  const bool iso = vol.geometry().isotropic(1e-9) && std::abs(vol.spacing()[0] - 1.0) < 1e-9;
  if (iso) return {clip_intensity(vol), lobes};
  return {clip_intensity(resample_to_isotropic(vol, 1.0)), resample_to_isotropic(lobes, 1.0)};
}

inline DetectionStage detect_stage(const phantom::CohortCase& c, const detect::Detector& detector) {
  auto [vol, lobes] = preprocess(c.volume, c.lobes);
  DetectionStage s{std::move(vol), std::move(lobes), {}, {}};
  s.candidates = detector.detect(s.volume);
  s.assignments = assign_lobes(s.candidates, s.lobes);
  return s;
}

inline CaseResult finish_pipeline(const phantom::CohortCase& c, const DetectionStage& s, Mode mode,
                                  const detect::Detector& detector, const extract::ExtractionBackend* backend) {
  CaseResult r;
  r.case_id = c.case_id();
  r.mode = mode;
  if (mode == Mode::guided) {
    require(backend != nullptr, Errc::config, "guided mode needs an extraction backend");
    r.phenotype = extract::extract_phenotype(c.report, *backend);
  }
  FilterResult f = filter_candidates(s.candidates, s.assignments, r.phenotype);
  r.detected = static_cast<std::int64_t>(s.candidates.size());
  r.discarded_no_lobe = static_cast<std::int64_t>(f.discarded_no_lobe.size());
  r.removed = mode == Mode::guided ? static_cast<std::int64_t>(f.removed_by_phenotype.size()) : r.discarded_no_lobe;
  r.kept = std::move(f.kept);
  r.kept_lobes = std::move(f.kept_lobes);
  for (const auto& k : r.kept) {
    r.masks.push_back(detector.segment(s.volume, k));
    r.mask_voxels.push_back(count_nonzero(r.masks.back()));
  }
  r.gt_boxes = c.gt_box_list();
  r.outcome = metrics::case_outcome(detect::as_detections(r.kept), r.gt_boxes, kOutcomeIou);
  for (const auto& p : r.outcome.match.pairs)
    if (c.gt_masks[p.gt].same_geometry(r.masks[p.det]))
      r.matched_dsc.push_back(metrics::dsc(r.masks[p.det], c.gt_masks[p.gt]));
  return r;
}

inline CaseResult run_pipeline(const phantom::CohortCase& c, Mode mode, const detect::Detector& detector,
                               const extract::ExtractionBackend* backend) {
  return finish_pipeline(c, detect_stage(c, detector), mode, detector, backend);
}

inline CaseResult run_pipeline(const phantom::CohortCase& c, Mode mode, const detect::DetectorConfig& cfg,
                               const extract::ExtractionBackend* backend) {
  return run_pipeline(c, mode, detect::ReferenceDetector(cfg), backend);
}

/// Alternative guidance: blank every lobe outside the phenotype, re-run the
/// detector, and keep what lands in the phenotype lobes.
inline std::vector<Candidate> masked_redetection(const DetectionStage& s, const TumorPhenotype& phenotype,
                                                 const detect::Detector& detector) {
  require(!phenotype.lobes.empty(), Errc::empty_phenotype, "masked re-detection needs at least one tumor lobe");
  const Volume masked = apply_lobe_mask(s.volume, s.lobes, phenotype.lobes);
  const auto cands = detector.detect(masked);
  return filter_candidates(cands, assign_lobes(cands, s.lobes), phenotype).kept;
}

inline nlohmann::ordered_json candidate_to_json(const Candidate& c) {
  nlohmann::ordered_json j;
  j["box_min"] = c.box.min;
  j["box_max"] = c.box.max;
  j["score"] = c.score;
  j["centroid"] = c.centroid;
  return j;
}

inline nlohmann::ordered_json to_json(const CaseResult& r) {
  nlohmann::ordered_json j;
  j["case_id"] = r.case_id;
  j["mode"] = std::string(to_string(r.mode));
  j["detected"] = r.detected;
  j["removed"] = r.removed;
  j["discarded_no_lobe"] = r.discarded_no_lobe;
  j["kept"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.kept.size(); ++i) {
    auto cj = candidate_to_json(r.kept[i]);
    cj["lobe"] = std::string(to_string(r.kept_lobes[i]));
    cj["mask_voxels"] = r.mask_voxels[i];
    j["kept"].push_back(std::move(cj));
  }
  j["phenotype"] = r.phenotype ? nlohmann::ordered_json(extract::phenotype_to_json(*r.phenotype)) : nlohmann::ordered_json();
  j["outcome"] = std::string(to_string(r.outcome.verdict));
  j["matching_ground_truth"] = std::string(metrics::table_label(r.outcome.verdict));
  j["ground_truth"] = r.outcome.gt_count;
  j["tp"] = r.outcome.match.tp;
  j["fp"] = r.outcome.match.fp;
  j["fn"] = r.outcome.match.fn;
  j["matched_dsc"] = r.matched_dsc;
  return j;
}

}  // namespace exact::guide
