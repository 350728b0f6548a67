#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "exact/core/lobe.hpp"
#include "exact/core/phenotype.hpp"
#include "exact/core/rng.hpp"
#include "exact/phantom/anatomy.hpp"

namespace exact::phantom {

enum class NoduleKind { true_tumor, distractor, suppressed_tumor };

constexpr std::string_view to_string(NoduleKind k) noexcept {
  switch (k) {
    case NoduleKind::true_tumor: return "true_tumor";
    case NoduleKind::distractor: return "distractor";
    case NoduleKind::suppressed_tumor: return "suppressed_tumor";
  }
  return "?";
}

inline NoduleKind parse_nodule_kind(std::string_view s) {
  if (s == "true_tumor") return NoduleKind::true_tumor;
  if (s == "distractor") return NoduleKind::distractor;
  if (s == "suppressed_tumor") return NoduleKind::suppressed_tumor;
  fail(Errc::config, "unknown nodule kind '" + std::string(s) + "'");
}

constexpr bool is_tumor(NoduleKind k) noexcept { return k != NoduleKind::distractor; }

/// Contrast of a tumor the reference detector cannot see at its default
/// threshold.
inline constexpr double kSuppressedContrastHu = 80.0;

struct NoduleSpec {
  LobeId lobe = LobeId::LUL;
  Vec3 center_frac{0.5, 0.5, 0.5};  // position inside the lobe's bounding box
  double radius_mm = 6.0;
  double contrast_hu = 700.0;  // added to the lung background
  NoduleKind kind = NoduleKind::true_tumor;

  bool operator==(const NoduleSpec&) const = default;
};

struct CaseSpec {
  std::string case_id;
  std::vector<NoduleSpec> nodules;
  double noise_sigma = 20.0;
  AnatomyParams anatomy;
  /// Lobes with previously treated tumors; mentioned in the report history.
  std::vector<LobeId> history_lobes;
  /// Malignant lymph stations confirmed by pathology.
  std::vector<std::string> lymph_stations;

  bool operator==(const CaseSpec&) const = default;
};

/// Canonical station code: one or two digits (1..14) with optional R/L.
inline std::optional<std::string> canonical_station(std::string_view raw) {
  static const std::regex re(R"(^\s*(1[0-4]|[1-9])\s*([RrLl])?\s*$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(raw.begin(), raw.end(), m, re)) return std::nullopt;
  std::string s = m[1].str();
  if (m[2].matched) s.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(m[2].str()[0]))));
  return s;
}

/// Phenotype implied by a spec: lobes of every tumor (visible or not) and
/// the confirmed lymph stations.
inline TumorPhenotype phenotype_of(const CaseSpec& spec) {
  TumorPhenotype p;
  for (const auto& n : spec.nodules)
    if (is_tumor(n.kind)) p.lobes.insert(n.lobe);
  for (const auto& s : spec.lymph_stations)
    if (auto c = canonical_station(s)) p.lymph_stations.insert(*c);
  return p;
}

struct GroundTruthBox {
  BBox3 box;
  LobeId lobe = LobeId::LUL;
  bool operator==(const GroundTruthBox&) const = default;
};

struct CohortCase {
  CaseSpec spec;
  std::uint64_t seed = 0;
  Volume volume;                  // 1 mm isotropic, clipped to [-1000, 600] HU
  LobeLabelMap lobes;
  std::vector<Mask> gt_masks;     // one per tumor, same order as gt_boxes
  std::vector<GroundTruthBox> gt_boxes;
  std::vector<Vec3> nodule_centers;  // per spec nodule, voxel coordinates
  TumorPhenotype phenotype_gt;
  std::string report;

  const std::string& case_id() const { return spec.case_id; }
  std::vector<BBox3> gt_box_list() const {
    std::vector<BBox3> out;
    for (const auto& g : gt_boxes) out.push_back(g.box);
    return out;
  }

  bool operator==(const CohortCase&) const = default;
};

}  // namespace exact::phantom
