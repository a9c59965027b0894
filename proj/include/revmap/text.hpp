#pragma once

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace revmap {

// A term in canonical form: lowercase, single-space separated, no punctuation.
// Produced by normalize_term; all index/taxonomy keys use this form.
using Term = std::string;

// Lowercases, maps '-'/'_' to spaces, strips other punctuation, collapses
// whitespace. Bytes >= 0x80 pass through unchanged so UTF-8 text survives.
inline Term normalize_term(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (unsigned char c : raw) {
    if (c == '-' || c == '_' || std::isspace(c)) {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else if (std::isalnum(c) || c >= 0x80) {
      out.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

inline std::vector<std::string> tokenize(std::string_view normalized) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start < normalized.size()) {
    std::size_t pos = normalized.find(' ', start);
    if (pos == std::string_view::npos) pos = normalized.size();
    if (pos > start) tokens.emplace_back(normalized.substr(start, pos - start));
    start = pos + 1;
  }
  return tokens;
}

// Space-joined n-grams of the token list, n in [min_n, max_n].
inline std::vector<std::string> ngrams(const std::vector<std::string>& tokens,
                                       int min_n, int max_n) {
  std::vector<std::string> out;
  for (int n = min_n; n <= max_n; ++n) {
    if (n <= 0 || static_cast<std::size_t>(n) > tokens.size()) continue;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string g = tokens[i];
      for (std::size_t j = 1; j < static_cast<std::size_t>(n); ++j) {
        g += ' ';
        g += tokens[i + j];
      }
      out.push_back(std::move(g));
    }
  }
  return out;
}

// Classic two-row Levenshtein.
inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  std::vector<std::size_t> row(a.size() + 1);
  for (std::size_t i = 0; i <= a.size(); ++i) row[i] = i;
  for (std::size_t j = 1; j <= b.size(); ++j) {
    std::size_t diag = row[0];
    row[0] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
      std::size_t saved = row[i];
      if (a[i - 1] == b[j - 1]) {
        row[i] = diag;
      } else {
        row[i] = std::min({row[i - 1], row[i], diag}) + 1;
      }
      diag = saved;
    }
  }
  return row[a.size()];
}

// Edit distance divided by the length of the longer string; in [0, 1].
inline double levenshtein_norm(std::string_view a, std::string_view b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("levenshtein_norm: empty input");
  return static_cast<double>(edit_distance(a, b)) /
         static_cast<double>(std::max(a.size(), b.size()));
}

inline double levenshtein_similarity(std::string_view a, std::string_view b) {
  return 1.0 - levenshtein_norm(a, b);
}

}  // namespace revmap
