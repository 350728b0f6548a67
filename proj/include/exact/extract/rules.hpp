#pragma once

#include <string_view>

#include "exact/core/phenotype.hpp"
#include "exact/extract/text.hpp"

namespace exact::extract {

/// Deterministic keyword parser. A sentence contributes its lobes when it
/// names a malignancy and is neither indeterminate nor historical; stations
/// come from sentences that call them malignant.
inline TumorPhenotype rule_extract(std::string_view report) {
  TumorPhenotype out;
  for (const auto& sentence : split_sentences(report)) {
    const std::string low = to_lower(sentence);
    const auto mentions = find_lobe_mentions(low);
    if (!mentions.lobes.empty() && has_malignancy_term(low) && !has_indeterminacy_marker(low) &&
        !has_history_marker(low))
      out.lobes.insert(mentions.lobes.begin(), mentions.lobes.end());
    if (has_word(low, "malignant")) {
      const auto st = find_stations(low);
      out.lymph_stations.insert(st.begin(), st.end());
    }
  }
  return out;
}

}  // namespace exact::extract
