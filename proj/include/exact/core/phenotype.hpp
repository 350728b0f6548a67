#pragma once

#include <set>
#include <string>

#include "exact/core/lobe.hpp"

namespace exact {

/// Report-derived tumor facts: lobes holding a current, determinate tumor and
/// malignant lymph node stations (canonical codes such as "4R", "7").
struct TumorPhenotype {
  LobeSet lobes;
  std::set<std::string> lymph_stations;

  bool operator==(const TumorPhenotype&) const = default;
};

inline std::string to_string(const TumorPhenotype& p) {
  std::string s = "lobes={";
  bool first = true;
  for (LobeId l : p.lobes) {
    s += (first ? "" : ",") + std::string(to_string(l));
    first = false;
  }
  s += "} lymph={";
  first = true;
  for (const auto& st : p.lymph_stations) {
    s += (first ? "" : ",") + st;
    first = false;
  }
  return s + "}";
}

}  // namespace exact
