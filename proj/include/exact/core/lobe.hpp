#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "exact/core/error.hpp"

namespace exact {

/// Lung lobe codes. The numeric values double as label codes in a
/// LobeLabelMap, where 0 is background.
enum class LobeId : std::uint8_t { RUL = 1, RML = 2, RLL = 3, LUL = 4, LLL = 5 };

inline constexpr std::array<LobeId, 5> kAllLobes = {LobeId::RUL, LobeId::RML, LobeId::RLL,
                                                    LobeId::LUL, LobeId::LLL};

inline constexpr std::uint8_t kBackgroundLabel = 0;

constexpr std::uint8_t label_of(LobeId lobe) noexcept { return static_cast<std::uint8_t>(lobe); }

constexpr std::optional<LobeId> lobe_from_label(std::uint8_t label) noexcept {
  if (label >= 1 && label <= 5) return static_cast<LobeId>(label);
  return std::nullopt;
}

constexpr std::string_view to_string(LobeId lobe) noexcept {
  switch (lobe) {
    case LobeId::RUL: return "RUL";
    case LobeId::RML: return "RML";
    case LobeId::RLL: return "RLL";
    case LobeId::LUL: return "LUL";
    case LobeId::LLL: return "LLL";
  }
  return "?";
}

constexpr std::string_view full_name(LobeId lobe) noexcept {
  switch (lobe) {
    case LobeId::RUL: return "right upper lobe";
    case LobeId::RML: return "right middle lobe";
    case LobeId::RLL: return "right lower lobe";
    case LobeId::LUL: return "left upper lobe";
    case LobeId::LLL: return "left lower lobe";
  }
  return "?";
}

namespace detail {
inline std::string normalize_lobe_text(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc) || c == '-' || c == '_') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(uc)));
  }
  return out;
}
}  // namespace detail

/// Accepts abbreviations, full names, and the "inferior" spelling used for
/// the lower lobes (RIL, LIL). Case and separators are ignored.
inline std::optional<LobeId> try_parse_lobe(std::string_view text) {
  const std::string s = detail::normalize_lobe_text(text);
  for (LobeId lobe : kAllLobes) {
    std::string abbr(to_string(lobe));
    std::transform(abbr.begin(), abbr.end(), abbr.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == abbr || s == full_name(lobe)) return lobe;
  }
  if (s == "ril" || s == "right inferior lobe") return LobeId::RLL;
  if (s == "lil" || s == "left inferior lobe") return LobeId::LLL;
  return std::nullopt;
}

inline LobeId parse_lobe(std::string_view text) {
  auto lobe = try_parse_lobe(text);
  if (!lobe) fail(Errc::invalid_option, "unknown lobe '" + std::string(text) + "'");
  return *lobe;
}

using LobeSet = std::set<LobeId>;

}  // namespace exact
