#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "revmap/classify.hpp"
#include "revmap/corpus.hpp"
#include "revmap/util.hpp"

namespace revmap {

// Per-topic per-year paper counts. Multi-labeled papers count once per
// assigned topic, so a year's column sum may exceed its distinct-paper count.
struct TrendTable {
  std::vector<std::string> topics;  // row order
  int year_lo = 0, year_hi = 0;     // inclusive, contiguous
  std::vector<std::vector<long long>> cells;  // [topic][year - year_lo]

  long long cell(std::size_t topic_idx, int year) const {
    return cells[topic_idx][static_cast<std::size_t>(year - year_lo)];
  }
};

// cell(t, y) = number of papers assigned topic t published in year y.
// With `topics` empty, rows cover every topic in the result, sorted.
inline TrendTable topic_year_counts(const ClassificationResult& result,
                                    const Corpus& corpus, int year_lo, int year_hi,
                                    std::vector<std::string> topics = {}) {
  if (year_hi < year_lo)
    throw std::invalid_argument("topic_year_counts: empty year range");
  if (topics.empty()) {
    std::set<std::string> all;
    for (const auto& [id, ts] : result.assignments) all.insert(ts.begin(), ts.end());
    topics.assign(all.begin(), all.end());
  }
  TrendTable table;
  table.topics = std::move(topics);
  table.year_lo = year_lo;
  table.year_hi = year_hi;
  table.cells.assign(table.topics.size(),
                     std::vector<long long>(static_cast<std::size_t>(year_hi - year_lo + 1), 0));
  std::map<std::string, std::size_t> row;
  for (std::size_t i = 0; i < table.topics.size(); ++i) row[table.topics[i]] = i;
  for (const auto& [paper_id, assigned] : result.assignments) {
    const Paper* p = corpus.find(paper_id);
    if (!p) continue;
    if (p->year < year_lo || p->year > year_hi) continue;
    for (const auto& t : assigned) {
      auto it = row.find(t);
      if (it != row.end())
        table.cells[it->second][static_cast<std::size_t>(p->year - year_lo)] += 1;
    }
  }
  return table;
}

// Topics ranked by total assignment count (desc, lexicographic tie-break),
// truncated to n. The "top ten main topics" selector.
inline std::vector<std::string> top_topics(const ClassificationResult& result,
                                           std::size_t n) {
  std::map<std::string, long long> totals;
  for (const auto& [id, ts] : result.assignments)
    for (const auto& t : ts) totals[t] += 1;
  std::vector<std::pair<long long, std::string>> ranked;
  for (const auto& [t, c] : totals) ranked.emplace_back(c, t);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (ranked.size() > n) ranked.resize(n);
  std::vector<std::string> out;
  for (auto& [c, t] : ranked) out.push_back(std::move(t));
  return out;
}

struct CitationStats {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  long long n = 0;
};

// Mean and population standard deviation of citation counts over the papers
// assigned to each topic; topics with no papers are omitted.
inline std::map<std::string, CitationStats> topic_citation_stats(
    const ClassificationResult& result, const Corpus& corpus) {
  std::map<std::string, std::vector<long long>> per_topic;
  for (const auto& [paper_id, assigned] : result.assignments) {
    const Paper* p = corpus.find(paper_id);
    if (!p) continue;
    for (const auto& t : assigned) per_topic[t].push_back(p->citations);
  }
  std::map<std::string, CitationStats> out;
  for (const auto& [t, cites] : per_topic) {
    if (cites.empty()) continue;
    double n = static_cast<double>(cites.size());
    double sum = 0.0;
    for (long long c : cites) sum += static_cast<double>(c);
    double mean = sum / n;
    double var = 0.0;
    for (long long c : cites) {
      double d = static_cast<double>(c) - mean;
      var += d * d;
    }
    var /= n;
    out[t] = CitationStats{mean, std::sqrt(var), static_cast<long long>(cites.size())};
  }
  return out;
}

// Percentages of each topic's count over the subset total of its year.
// A year whose subset total is zero yields empty (undefined) cells.
struct ShareTable {
  std::vector<std::string> topics;
  int year_lo = 0, year_hi = 0;
  std::vector<std::vector<std::optional<double>>> cells;
};

inline ShareTable topic_share(const TrendTable& trend,
                              const std::vector<std::string>& topic_subset) {
  if (topic_subset.empty())
    throw std::invalid_argument("topic_share: empty topic subset");
  std::map<std::string, std::size_t> row;
  for (std::size_t i = 0; i < trend.topics.size(); ++i) row[trend.topics[i]] = i;
  for (const auto& t : topic_subset)
    if (!row.count(t))
      throw std::invalid_argument("topic_share: topic not in trend table: " + t);
  ShareTable out;
  out.topics = topic_subset;
  out.year_lo = trend.year_lo;
  out.year_hi = trend.year_hi;
  std::size_t years = static_cast<std::size_t>(trend.year_hi - trend.year_lo + 1);
  out.cells.assign(topic_subset.size(), std::vector<std::optional<double>>(years));
  for (std::size_t y = 0; y < years; ++y) {
    long long total = 0;
    for (const auto& t : topic_subset) total += trend.cells[row[t]][y];
    if (total == 0) continue;  // undefined marker cells
    for (std::size_t i = 0; i < topic_subset.size(); ++i) {
      out.cells[i][y] = 100.0 * static_cast<double>(trend.cells[row[topic_subset[i]]][y]) /
                        static_cast<double>(total);
    }
  }
  return out;
}

enum class TableFormat { csv, json };

inline TableFormat table_format_from_name(const std::string& name) {
  if (name == "csv") return TableFormat::csv;
  if (name == "json") return TableFormat::json;
  throw std::runtime_error("unknown table format: " + name);
}

inline void export_trends(const TrendTable& t, const std::filesystem::path& path,
                          TableFormat format) {
  if (format == TableFormat::csv) {
    std::string out = "topic";
    for (int y = t.year_lo; y <= t.year_hi; ++y) out += "," + std::to_string(y);
    out += "\n";
    for (std::size_t i = 0; i < t.topics.size(); ++i) {
      out += csv_escape(t.topics[i]);
      for (const auto& c : t.cells[i]) out += "," + std::to_string(c);
      out += "\n";
    }
    write_file(path, out);
    return;
  }
  nlohmann::json j;
  j["year_lo"] = t.year_lo;
  j["year_hi"] = t.year_hi;
  j["topics"] = t.topics;
  j["cells"] = t.cells;
  write_file(path, j.dump(2) + "\n");
}

inline void export_shares(const ShareTable& t, const std::filesystem::path& path,
                          TableFormat format) {
  auto cell_text = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("NA");
  };
  if (format == TableFormat::csv) {
    std::string out = "topic";
    for (int y = t.year_lo; y <= t.year_hi; ++y) out += "," + std::to_string(y);
    out += "\n";
    for (std::size_t i = 0; i < t.topics.size(); ++i) {
      out += csv_escape(t.topics[i]);
      for (const auto& c : t.cells[i]) out += "," + cell_text(c);
      out += "\n";
    }
    write_file(path, out);
    return;
  }
  nlohmann::json j;
  j["year_lo"] = t.year_lo;
  j["year_hi"] = t.year_hi;
  j["topics"] = t.topics;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : t.cells) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& c : row) {
      if (c) r.push_back(*c);
      else r.push_back(nullptr);
    }
    rows.push_back(r);
  }
  j["cells"] = rows;
  write_file(path, j.dump(2) + "\n");
}

inline void export_citation_stats(const std::map<std::string, CitationStats>& stats,
                                  const std::filesystem::path& path,
                                  TableFormat format) {
  if (format == TableFormat::csv) {
    std::string out = "topic,mean,stddev,n\n";
    for (const auto& [t, s] : stats) {
      out += csv_escape(t) + "," + format_double(s.mean) + "," +
             format_double(s.stddev) + "," + std::to_string(s.n) + "\n";
    }
    write_file(path, out);
    return;
  }
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [t, s] : stats) {
    j[t] = {{"mean", s.mean}, {"stddev", s.stddev}, {"n", s.n}};
  }
  write_file(path, j.dump(2) + "\n");
}

}  // namespace revmap
