#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "exact/core/rng.hpp"
#include "exact/phantom/spec.hpp"

namespace exact::phantom {

namespace detail {

template <class T>
const T& pick(Rng& rng, const std::vector<T>& options) {
  return options[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(options.size()) - 1))];
}

inline std::string lobe_phrase(Rng& rng, LobeId lobe) {
  switch (rng.uniform_int(0, 2)) {
    case 0: return std::string(to_string(lobe));
    case 1: return std::string(full_name(lobe));
    default: return std::string(full_name(lobe)) + " (" + std::string(to_string(lobe)) + ")";
  }
}

inline std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

inline std::string size_mm(double radius) { return std::to_string(static_cast<int>(std::lround(2.0 * radius))); }

inline std::string count_word(std::size_t n) {
  static const char* words[] = {"zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"};
  return n < 10 ? words[n] : std::to_string(n);
}

inline std::string tumor_sentence(Rng& rng, const NoduleSpec& n) {
  static const std::vector<std::string> terms = {"tumor", "carcinoma", "malignancy"};
  const std::string term = pick(rng, terms);
  const std::string lobe = lobe_phrase(rng, n.lobe);
  const std::string size = size_mm(n.radius_mm);
  switch (rng.uniform_int(0, 4)) {
    case 0: return "Biopsy-proven " + term + " involving the " + lobe + ".";
    case 1: return "There is a " + size + " mm spiculated " + term + " in the " + lobe + ".";
    case 2: return "Current " + term + " is identified in the " + lobe + ", measuring " + size + " mm.";
    case 3: return "Determinate " + term + " of the " + lobe + " measuring " + size + " mm.";
    default: return "Known primary " + term + " in the " + lobe + " (" + size + " mm).";
  }
}

inline std::string distractor_sentence(Rng& rng, LobeId lobe, std::size_t count, double radius) {
  const std::string where = lobe_phrase(rng, lobe);
  const std::string size = size_mm(radius);
  if (count > 1) {
    switch (rng.uniform_int(0, 1)) {
      case 0: return capitalize(count_word(count)) + " indeterminate nodules in the " + where + ", likely benign.";
      default:
        return capitalize(count_word(count)) + " small nodules in the " + where +
               " remain indeterminate; malignancy cannot be excluded.";
    }
  }
  switch (rng.uniform_int(0, 2)) {
    case 0: return "Indeterminate " + size + " mm nodule in the " + where + ", likely benign.";
    case 1: return "A " + size + " mm indeterminate nodule is seen in the " + where + "; malignancy cannot be excluded.";
    default: return "Calcified " + size + " mm nodule in the " + where + ", compatible with benign granuloma.";
  }
}

inline std::string history_sentence(Rng& rng, LobeId lobe) {
  static const std::vector<std::string> terms = {"tumor", "carcinoma", "malignancy"};
  const std::string term = pick(rng, terms);
  const std::string where = lobe_phrase(rng, lobe);
  switch (rng.uniform_int(0, 2)) {
    case 0: return "History of previously treated " + term + " of the " + where + ".";
    case 1: return "Status post SBRT for prior " + term + " in the " + where + ", without evidence of recurrence.";
    default: return "The patient was previously treated for a " + term + " in the " + where + ".";
  }
}

inline std::string lymph_sentence(Rng& rng, const std::string& station) {
  switch (rng.uniform_int(0, 2)) {
    case 0: return "Station " + station + " lymph node is malignant.";
    case 1: return "Pathology shows malignant cells in lymph node station " + station + ".";
    default: return "EBUS sampling of station " + station + " node: malignant.";
  }
}

}  // namespace detail

/// Free-text report consistent with the spec's ground truth. Sentence
/// templates and lobe spellings rotate with `style_seed`; the set of facts
/// never does.
inline std::string generate_report(const CaseSpec& spec, std::uint64_t style_seed) {
  Rng rng(style_seed);
  const TumorPhenotype pheno = phenotype_of(spec);

  std::vector<std::string> findings;
  for (const auto& n : spec.nodules)
    if (is_tumor(n.kind)) findings.push_back(detail::tumor_sentence(rng, n));

  std::map<LobeId, std::pair<std::size_t, double>> distractors;
  for (const auto& n : spec.nodules) {
    if (n.kind != NoduleKind::distractor || pheno.lobes.count(n.lobe)) continue;
    auto& [count, radius] = distractors[n.lobe];
    ++count;
    radius = std::max(radius, n.radius_mm);
  }
  for (const auto& [lobe, info] : distractors)
    findings.push_back(detail::distractor_sentence(rng, lobe, info.first, info.second));

  static const std::vector<std::string> filler = {
      "Heart size is normal.", "No pleural effusion or pneumothorax.", "Mild centrilobular emphysema.",
      "Degenerative changes of the thoracic spine.", "The central airways are patent.",
      "No acute osseous abnormality."};
  std::vector<std::string> pool = filler;
  const int n_filler = rng.uniform_int(1, 3);
  for (int i = 0; i < n_filler; ++i) {
    const auto k = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(pool.size()) - 1));
    findings.push_back(pool[k]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
  }
  // Fisher-Yates with the portable generator.
  for (std::size_t i = findings.size(); i > 1; --i)
    std::swap(findings[i - 1], findings[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);

  std::string report = "CT CHEST WITH CONTRAST\n\nCLINICAL HISTORY:\n";
  if (spec.history_lobes.empty()) {
    report += "Staging for non-small cell lung cancer.\n";
  } else {
    for (LobeId l : spec.history_lobes) report += detail::history_sentence(rng, l) + "\n";
  }
  report += "\nFINDINGS:\n";
  for (const auto& s : findings) report += s + "\n";
  report += "\nPATHOLOGY:\n";
  if (pheno.lymph_stations.empty()) {
    report += "No enlarged mediastinal or hilar lymph nodes.\n";
  } else {
    for (const auto& st : pheno.lymph_stations) report += detail::lymph_sentence(rng, st) + "\n";
  }
  return report;
}

inline std::string generate_report(const CohortCase& c, std::uint64_t style_seed) {
  return generate_report(c.spec, style_seed);
}

}  // namespace exact::phantom
