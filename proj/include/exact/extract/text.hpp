#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "exact/core/lobe.hpp"

namespace exact::extract {

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// Splits on line breaks and on . ! ? followed by whitespace or end of text,
/// so decimals such as "4.5" stay intact. Empty pieces are dropped.
inline std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    const auto b = cur.find_first_not_of(" \t\r");
    if (b != std::string::npos) out.push_back(cur.substr(b, cur.find_last_not_of(" \t\r") - b + 1));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      flush();
      continue;
    }
    cur.push_back(c);
    if ((c == '.' || c == '!' || c == '?') &&
        (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]))))
      flush();
  }
  flush();
  return out;
}

/// Lobe references found in lowercase text. `invalid` collects lobe-like
/// phrases that name no real lobe ("left middle lobe", "LML").
struct LobeMentions {
  LobeSet lobes;
  std::vector<std::string> invalid;
};

inline LobeMentions find_lobe_mentions(std::string_view lowered) {
  static const std::regex full(R"(\b(right|left)[\s-]+(upper|middle|lower|inferior|superior)[\s-]+lobes?\b)");
  static const std::regex abbr(R"(\b([rl])([umli])l\b)");
  LobeMentions out;
  const std::string s(lowered);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), full); it != std::sregex_iterator(); ++it) {
    const std::string side = (*it)[1], level = (*it)[2];
    std::string name = side + " " + level + " lobe";
    if (auto lobe = try_parse_lobe(name)) {
      out.lobes.insert(*lobe);
    } else {
      out.invalid.push_back(it->str());
    }
  }
  for (auto it = std::sregex_iterator(s.begin(), s.end(), abbr); it != std::sregex_iterator(); ++it) {
    if (auto lobe = try_parse_lobe(it->str())) {
      out.lobes.insert(*lobe);
    } else {
      out.invalid.push_back(it->str());
    }
  }
  return out;
}

inline bool has_malignancy_term(std::string_view lowered) {
  static const std::regex re(R"((tumou?rs?|carcinomas?|malignan(t|cy|cies)))");
  const std::string s(lowered);
  return std::regex_search(s, re);
}

inline bool has_indeterminacy_marker(std::string_view lowered) {
  static const std::regex re(R"(\b(indeterminate|benign)\b)");
  const std::string s(lowered);
  return std::regex_search(s, re);
}

inline bool has_history_marker(std::string_view lowered) {
  static const std::regex re(R"(\b(history|previously|prior)\b|\btreated\s+in\b)");
  const std::string s(lowered);
  return std::regex_search(s, re);
}

inline bool has_word(std::string_view lowered, std::string_view word) {
  const std::regex re("\\b" + std::string(word) + "\\b");
  const std::string s(lowered);
  return std::regex_search(s, re);
}

/// Lymph station codes ("4R", "7", "10L") that sit within three words of
/// "station"/"node"/"level". Numbers followed by a length unit are sizes.
inline std::set<std::string> find_stations(std::string_view lowered) {
  static const std::regex word_re(R"([a-z0-9]+)");
  static const std::regex code_re(R"(^(1[0-4]|[1-9])([rl])?$)");
  static const std::set<std::string> anchors = {"station", "stations", "node", "nodes", "level", "levels"};
  static const std::set<std::string> units = {"mm", "cm"};
  std::vector<std::string> words;
  const std::string s(lowered);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), word_re); it != std::sregex_iterator(); ++it)
    words.push_back(it->str());
  std::set<std::string> out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::smatch m;
    if (!std::regex_match(words[i], m, code_re)) continue;
    if (i + 1 < words.size() && units.count(words[i + 1])) continue;
    bool anchored = false;
    for (std::size_t j = i >= 3 ? i - 3 : 0; j <= std::min(words.size() - 1, i + 3) && !anchored; ++j)
      anchored = anchors.count(words[j]) > 0;
    if (!anchored) continue;
    std::string code = m[1].str();
    if (m[2].matched) code.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(m[2].str()[0]))));
    out.insert(code);
  }
  return out;
}

}  // namespace exact::extract
