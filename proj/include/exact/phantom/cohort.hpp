#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "exact/core/rng.hpp"
#include "exact/phantom/case.hpp"

namespace exact::phantom {

struct CohortSpec {
  std::string name;
  std::vector<CaseSpec> cases;
};

/// Per-case seed: cohort seed XOR zero-based case index.
constexpr std::uint64_t case_seed(std::uint64_t cohort_seed, std::size_t index) noexcept {
  return cohort_seed ^ static_cast<std::uint64_t>(index);
}

inline std::vector<CohortCase> generate_cohort(const CohortSpec& spec, std::uint64_t seed) {
  std::set<std::string> ids;
  for (const auto& c : spec.cases)
    require(ids.insert(c.case_id).second, Errc::generation, "duplicate case id '" + c.case_id + "'");
  std::vector<CohortCase> out;
  out.reserve(spec.cases.size());
  for (std::size_t i = 0; i < spec.cases.size(); ++i) out.push_back(generate_case(spec.cases[i], case_seed(seed, i)));
  return out;
}

// -- JSON ------------------------------------------------------------------

namespace detail {
inline Vec3 vec3_from(const nlohmann::json& j, const char* what) {
  require(j.is_array() && j.size() == 3, Errc::config, std::string(what) + " must be an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}
}  // namespace detail

inline nlohmann::json to_json(const AnatomyParams& a) {
  auto ell = [](const Ellipsoid& e) {
    return nlohmann::json{{"center", e.center}, {"semi_axes", e.semi}};
  };
  return {{"dims", a.dims},
          {"body_center_yx", {a.body_center_y, a.body_center_x}},
          {"body_semi_axes_yx", {a.body_semi_y, a.body_semi_x}},
          {"right_lung", ell(a.right_lung)},
          {"left_lung", ell(a.left_lung)},
          {"right_upper_fissure", a.right_upper_fissure},
          {"right_lower_fissure", a.right_lower_fissure},
          {"left_fissure", a.left_fissure}};
}

/// Missing keys keep the default anatomy.
inline AnatomyParams anatomy_from_json(const nlohmann::json& j) {
  AnatomyParams a;
  if (j.contains("dims")) {
    const auto d = detail::vec3_from(j["dims"], "anatomy.dims");
    a.dims = {static_cast<int>(d[0]), static_cast<int>(d[1]), static_cast<int>(d[2])};
  }
  if (j.contains("body_center_yx")) {
    a.body_center_y = j["body_center_yx"].at(0).get<double>();
    a.body_center_x = j["body_center_yx"].at(1).get<double>();
  }
  if (j.contains("body_semi_axes_yx")) {
    a.body_semi_y = j["body_semi_axes_yx"].at(0).get<double>();
    a.body_semi_x = j["body_semi_axes_yx"].at(1).get<double>();
  }
  auto ell = [](const nlohmann::json& e, Ellipsoid& out) {
    if (e.contains("center")) out.center = detail::vec3_from(e["center"], "lung center");
    if (e.contains("semi_axes")) out.semi = detail::vec3_from(e["semi_axes"], "lung semi_axes");
  };
  if (j.contains("right_lung")) ell(j["right_lung"], a.right_lung);
  if (j.contains("left_lung")) ell(j["left_lung"], a.left_lung);
  a.right_upper_fissure = j.value("right_upper_fissure", a.right_upper_fissure);
  a.right_lower_fissure = j.value("right_lower_fissure", a.right_lower_fissure);
  a.left_fissure = j.value("left_fissure", a.left_fissure);
  a.validate();
  return a;
}

inline nlohmann::json to_json(const NoduleSpec& n) {
  return {{"lobe", std::string(to_string(n.lobe))},
          {"center_frac", n.center_frac},
          {"radius_mm", n.radius_mm},
          {"contrast_hu", n.contrast_hu},
          {"kind", std::string(to_string(n.kind))}};
}

inline nlohmann::json to_json(const CaseSpec& c) {
  nlohmann::json nodules = nlohmann::json::array();
  for (const auto& n : c.nodules) nodules.push_back(to_json(n));
  nlohmann::json history = nlohmann::json::array();
  for (LobeId l : c.history_lobes) history.push_back(std::string(to_string(l)));
  nlohmann::json j{{"case_id", c.case_id},         {"noise_sigma", c.noise_sigma}, {"nodules", nodules},
                   {"history_lobes", history},      {"lymph_stations", c.lymph_stations}};
  if (!(c.anatomy == AnatomyParams{})) j["anatomy"] = to_json(c.anatomy);
  return j;
}

inline NoduleSpec nodule_from_json(const nlohmann::json& j) {
  NoduleSpec n;
  n.lobe = parse_lobe(j.at("lobe").get<std::string>());
  n.kind = parse_nodule_kind(j.value("kind", std::string("true_tumor")));
  if (j.contains("center_frac")) n.center_frac = detail::vec3_from(j["center_frac"], "center_frac");
  n.radius_mm = j.value("radius_mm", n.radius_mm);
  n.contrast_hu = j.value("contrast_hu", n.kind == NoduleKind::suppressed_tumor ? kSuppressedContrastHu : n.contrast_hu);
  return n;
}

inline CaseSpec case_from_json(const nlohmann::json& j) {
  CaseSpec c;
  const auto& id = j.at("case_id");
  c.case_id = id.is_string() ? id.get<std::string>() : id.dump();
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  for (const auto& n : j.value("nodules", nlohmann::json::array())) c.nodules.push_back(nodule_from_json(n));
  for (const auto& l : j.value("history_lobes", nlohmann::json::array()))
    c.history_lobes.push_back(parse_lobe(l.get<std::string>()));
  for (const auto& s : j.value("lymph_stations", nlohmann::json::array()))
    c.lymph_stations.push_back(s.get<std::string>());
  if (j.contains("anatomy")) c.anatomy = anatomy_from_json(j["anatomy"]);
  return c;
}

inline CohortSpec cohort_from_json(const nlohmann::json& j) {
  try {
    CohortSpec s;
    s.name = j.value("name", std::string("cohort"));
    for (const auto& c : j.at("cases")) s.cases.push_back(case_from_json(c));
    require(!s.cases.empty(), Errc::config, "cohort lists no cases");
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config, std::string("cohort spec: ") + e.what());
  }
}

inline nlohmann::json to_json(const CohortSpec& s) {
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : s.cases) cases.push_back(to_json(c));
  return {{"name", s.name}, {"cases", cases}};
}

inline CohortSpec load_cohort_spec(const std::filesystem::path& path) {
  std::ifstream f(path);
  require(f.good(), Errc::io, "cannot open cohort spec " + path.string());
  try {
    return cohort_from_json(nlohmann::json::parse(f));
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::config, path.string() + ": " + e.what());
  }
}

// -- Random cohorts ----------------------------------------------------------

struct RandomCaseOptions {
  int min_tumors = 1;
  int max_tumors = 2;
  int min_distractors = 0;
  int max_distractors = 4;
  double tumor_radius_lo = 3.5, tumor_radius_hi = 8.0;
  double tumor_contrast_lo = 650.0, tumor_contrast_hi = 900.0;
  double distractor_radius_lo = 2.5, distractor_radius_hi = 5.0;
  double distractor_contrast_lo = 650.0, distractor_contrast_hi = 850.0;
  double suppressed_probability = 0.0;  // chance a tumor is generated invisible
  double margin_mm = 3.0;               // clearance to lobe borders and other nodules
  double anatomy_jitter_mm = 2.0;
  double history_probability = 0.4;
  double lymph_probability = 0.5;
  double noise_sigma = 20.0;
};

namespace detail {
inline bool sphere_clear(const LobeLabelMap& lobes, const Vec3& c, double r, LobeId lobe) {
  const int ir = static_cast<int>(std::ceil(r)) + 1;
  const auto want = label_of(lobe);
  for (int z = static_cast<int>(c[0]) - ir; z <= static_cast<int>(c[0]) + ir; ++z)
    for (int y = static_cast<int>(c[1]) - ir; y <= static_cast<int>(c[1]) + ir; ++y)
      for (int x = static_cast<int>(c[2]) - ir; x <= static_cast<int>(c[2]) + ir; ++x) {
        const double dz = z - c[0], dy = y - c[1], dx = x - c[2];
        if (dz * dz + dy * dy + dx * dx > r * r) continue;
        if (!lobes.in_bounds(z, y, x) || lobes(z, y, x) != want) return false;
      }
  return true;
}
}  // namespace detail

/// Random but valid spec: nodules sit inside their lobes with `margin_mm`
/// clearance, and distractors avoid the tumor lobes so the report and the
/// detector agree on what guidance should remove.
inline CaseSpec random_case_spec(const std::string& case_id, Rng& rng, const RandomCaseOptions& opt = {}) {
  CaseSpec spec;
  spec.case_id = case_id;
  spec.noise_sigma = opt.noise_sigma;
  auto jitter = [&] { return rng.uniform(-opt.anatomy_jitter_mm, opt.anatomy_jitter_mm); };
  for (auto* lung : {&spec.anatomy.right_lung, &spec.anatomy.left_lung}) {
    for (int a = 0; a < 3; ++a) lung->center[a] += jitter();
    for (int a = 0; a < 3; ++a) lung->semi[a] += jitter();
  }
  const LobeLabelMap lobes = rasterize_lobes(spec.anatomy);
  const auto boxes = lobe_boxes(lobes);

  std::vector<Vec3> centers;
  std::vector<double> radii;
  auto place = [&](LobeId lobe, double radius, double contrast, NoduleKind kind) -> bool {
    const auto& box = *boxes[label_of(lobe)];
    for (int attempt = 0; attempt < 400; ++attempt) {
      Vec3 frac{rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
      // Round through the same formula resolve_nodules uses.
      Vec3 c;
      for (int a = 0; a < 3; ++a) c[a] = box.min[a] + frac[a] * (box.max[a] - 1 - box.min[a]);
      if (!detail::sphere_clear(lobes, c, radius + opt.margin_mm, lobe)) continue;
      bool apart = true;
      for (std::size_t k = 0; k < centers.size() && apart; ++k)
        apart = std::hypot(c[0] - centers[k][0], c[1] - centers[k][1], c[2] - centers[k][2]) >=
                radius + radii[k] + 2.0 * opt.margin_mm;
      if (!apart) continue;
      centers.push_back(c);
      radii.push_back(radius);
      spec.nodules.push_back({lobe, frac, radius, contrast, kind});
      return true;
    }
    return false;
  };

  const int n_tumors = rng.uniform_int(opt.min_tumors, opt.max_tumors);
  LobeSet tumor_lobes;
  while (static_cast<int>(tumor_lobes.size()) < n_tumors) tumor_lobes.insert(kAllLobes[rng.uniform_int(0, 4)]);
  for (LobeId lobe : tumor_lobes) {
    const bool suppressed = rng.bernoulli(opt.suppressed_probability);
    const double r = rng.uniform(opt.tumor_radius_lo, opt.tumor_radius_hi);
    const double contrast = suppressed ? kSuppressedContrastHu : rng.uniform(opt.tumor_contrast_lo, opt.tumor_contrast_hi);
    require(place(lobe, r, contrast, suppressed ? NoduleKind::suppressed_tumor : NoduleKind::true_tumor),
            Errc::generation, "could not place tumor in " + std::string(to_string(lobe)));
  }
  std::vector<LobeId> other;
  for (LobeId l : kAllLobes)
    if (!tumor_lobes.count(l)) other.push_back(l);
  const int n_distractors = rng.uniform_int(opt.min_distractors, opt.max_distractors);
  for (int i = 0; i < n_distractors && !other.empty(); ++i) {
    const LobeId lobe = other[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(other.size()) - 1))];
    const double r = rng.uniform(opt.distractor_radius_lo, opt.distractor_radius_hi);
    place(lobe, r, rng.uniform(opt.distractor_contrast_lo, opt.distractor_contrast_hi), NoduleKind::distractor);
  }
  if (!other.empty() && rng.bernoulli(opt.history_probability))
    spec.history_lobes.push_back(other[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(other.size()) - 1))]);
  static const std::vector<std::string> stations = {"2R", "2L", "4R", "4L", "7", "10R", "10L", "11R", "11L"};
  if (rng.bernoulli(opt.lymph_probability)) {
    const int n = rng.uniform_int(1, 2);
    std::set<std::string> chosen;
    while (static_cast<int>(chosen.size()) < n)
      chosen.insert(stations[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(stations.size()) - 1))]);
    spec.lymph_stations.assign(chosen.begin(), chosen.end());
  }
  return spec;
}

inline CohortSpec random_cohort_spec(std::size_t n_cases, std::uint64_t seed, const RandomCaseOptions& opt = {}) {
  CohortSpec s;
  s.name = "random";
  Rng rng(seed);
  for (std::size_t i = 0; i < n_cases; ++i) s.cases.push_back(random_case_spec("R" + std::to_string(i + 1), rng, opt));
  return s;
}

}  // namespace exact::phantom
