#pragma once

#include <regex>
#include <set>
#include <string>
#include <string_view>

#include "exact/core/phenotype.hpp"
#include "exact/extract/prompt.hpp"
#include "exact/extract/text.hpp"

namespace exact::extract {

namespace detail {
// Places a model might name that are not among the five lobe options.
inline const std::regex& non_option_site_re() {
  static const std::regex re(
      R"(\b(pancreas|pancreatic|liver|hepatic|kidney|renal|brain|bone|adrenal|breast|colon|stomach|spleen|thyroid|prostate|esophagus|pleura|pleural|mediastinum|trachea|heart)\b)");
  return re;
}

inline std::set<std::string> answer_stations(std::string_view lowered) {
  static const std::regex re(R"(\b(1[0-4]|[1-9])([rl])?\b(?!\s*(mm|cm)\b))");
  std::set<std::string> out;
  const std::string s(lowered);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
    std::string code = (*it)[1].str();
    if ((*it)[2].matched) code.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>((*it)[2].str()[0]))));
    out.insert(code);
  }
  return out;
}
}  // namespace detail

/// Validates a model answer. Lobe answers must name at least one of the five
/// options and nothing lobe-like outside them; lymph answers may be empty.
inline TumorPhenotype parse_phenotype_response(std::string_view content, PromptKind kind) {
  const std::string low = to_lower(content);
  TumorPhenotype out;
  if (kind == PromptKind::lymph) {
    out.lymph_stations = detail::answer_stations(low);
    return out;
  }
  const auto mentions = find_lobe_mentions(low);
  if (!mentions.invalid.empty())
    fail(Errc::invalid_option, "answer names '" + mentions.invalid.front() + "', which is not a lobe option");
  if (mentions.lobes.empty()) {
    std::smatch m;
    if (std::regex_search(low, m, detail::non_option_site_re()))
      fail(Errc::invalid_option, "answer names '" + m.str() + "', which is not a lobe option");
    fail(Errc::unparseable_response, "no lobe found in answer '" + std::string(content) + "'");
  }
  out.lobes = mentions.lobes;
  return out;
}

}  // namespace exact::extract
