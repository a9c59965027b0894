#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "revmap/text.hpp"
#include "revmap/util.hpp"

namespace revmap {

// One bibliographic record as found in scholarly metadata dumps.
struct Paper {
  std::string id;
  std::string title;
  std::string abstract;
  std::vector<std::string> keywords;  // raw, as supplied
  std::string venue;
  int year = 0;
  std::vector<std::string> authors;
  long long citations = 0;
};

struct Corpus {
  std::vector<Paper> papers;
  std::vector<std::string> warnings;  // one entry per skipped row

  std::size_t size() const { return papers.size(); }

  const Paper* find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &papers[it->second];
  }

  void add(Paper p) {
    if (by_id_.count(p.id))
      throw std::runtime_error("duplicate paper id: " + p.id);
    by_id_.emplace(p.id, papers.size());
    papers.push_back(std::move(p));
  }

 private:
  std::unordered_map<std::string, std::size_t> by_id_;
};

enum class CorpusFormat { jsonl, csv };

namespace detail {

inline int current_year() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  return tm.tm_year + 1900;
}

inline bool validate_paper(const Paper& p, std::string& why) {
  if (p.id.empty()) { why = "empty id"; return false; }
  int ymax = current_year();
  if (p.year < 1900 || p.year > ymax) {
    why = "year out of range [1900," + std::to_string(ymax) + "]";
    return false;
  }
  if (p.citations < 0) { why = "negative citation count"; return false; }
  return true;
}

inline bool paper_from_json(const nlohmann::json& j, Paper& p, std::string& why) {
  auto need = [&](const char* key) -> const nlohmann::json* {
    auto it = j.find(key);
    if (it == j.end()) { why = std::string("missing field '") + key + "'"; return nullptr; }
    return &*it;
  };
  const nlohmann::json* f;
  if (!(f = need("id")) || !f->is_string()) { if (why.empty()) why = "field 'id' not a string"; return false; }
  p.id = f->get<std::string>();
  if (!(f = need("title")) || !f->is_string()) { if (why.empty()) why = "field 'title' not a string"; return false; }
  p.title = f->get<std::string>();
  if (!(f = need("abstract")) || !f->is_string()) { if (why.empty()) why = "field 'abstract' not a string"; return false; }
  p.abstract = f->get<std::string>();
  if (!(f = need("keywords")) || !f->is_array()) { if (why.empty()) why = "field 'keywords' not an array"; return false; }
  for (const auto& k : *f) {
    if (!k.is_string()) { why = "non-string keyword"; return false; }
    p.keywords.push_back(k.get<std::string>());
  }
  if (!(f = need("venue")) || !f->is_string()) { if (why.empty()) why = "field 'venue' not a string"; return false; }
  p.venue = f->get<std::string>();
  if (!(f = need("year")) || !f->is_number_integer()) { if (why.empty()) why = "field 'year' not an integer"; return false; }
  p.year = f->get<int>();
  if (!(f = need("authors")) || !f->is_array()) { if (why.empty()) why = "field 'authors' not an array"; return false; }
  for (const auto& a : *f) {
    if (!a.is_string()) { why = "non-string author"; return false; }
    p.authors.push_back(a.get<std::string>());
  }
  if (!(f = need("citations")) || !f->is_number_integer()) { if (why.empty()) why = "field 'citations' not an integer"; return false; }
  p.citations = f->get<long long>();
  return validate_paper(p, why);
}

inline Corpus ingest_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read corpus file: " + path.string());
  Corpus corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    std::string why;
    Paper p;
    if (j.is_discarded()) {
      why = "malformed JSON";
    } else if (!j.is_object()) {
      why = "record is not an object";
    } else if (paper_from_json(j, p, why)) {
      corpus.add(std::move(p));  // duplicate id throws: fatal
      continue;
    }
    corpus.warnings.push_back(path.filename().string() + ":" +
                              std::to_string(lineno) + ": skipped row (" + why + ")");
  }
  return corpus;
}

inline Corpus ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read corpus file: " + path.string());
  Corpus corpus;
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("csv corpus missing header row: " + path.string());
  auto header = csv_parse_line(line);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* required :
       {"id", "title", "abstract", "keywords", "venue", "year", "authors", "citations"}) {
    if (!col.count(required))
      throw std::runtime_error(std::string("csv corpus header missing column '") +
                               required + "': " + path.string());
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = csv_parse_line(line);
    std::string why;
    if (fields.size() < header.size()) {
      why = "row has fewer fields than header";
    } else {
      Paper p;
      p.id = fields[col["id"]];
      p.title = fields[col["title"]];
      p.abstract = fields[col["abstract"]];
      for (auto& k : split(fields[col["keywords"]], ';'))
        if (!k.empty()) p.keywords.push_back(k);
      p.venue = fields[col["venue"]];
      for (auto& a : split(fields[col["authors"]], ';'))
        if (!a.empty()) p.authors.push_back(a);
      const std::string& ys = fields[col["year"]];
      const std::string& cs = fields[col["citations"]];
      char* end = nullptr;
      p.year = static_cast<int>(std::strtol(ys.c_str(), &end, 10));
      bool year_ok = end && *end == '\0' && !ys.empty();
      p.citations = std::strtoll(cs.c_str(), &end, 10);
      bool cit_ok = end && *end == '\0' && !cs.empty();
      if (!year_ok) {
        why = "field 'year' not an integer";
      } else if (!cit_ok) {
        why = "field 'citations' not an integer";
      } else if (validate_paper(p, why)) {
        corpus.add(std::move(p));
        continue;
      }
    }
    corpus.warnings.push_back(path.filename().string() + ":" +
                              std::to_string(lineno) + ": skipped row (" + why + ")");
  }
  return corpus;
}

}  // namespace detail

// Reads a corpus file. Malformed rows are skipped with a warning; a duplicate
// paper id aborts the ingest.
inline Corpus ingest_corpus(const std::filesystem::path& path, CorpusFormat format) {
  switch (format) {
    case CorpusFormat::jsonl: return detail::ingest_jsonl(path);
    case CorpusFormat::csv: return detail::ingest_csv(path);
  }
  throw std::runtime_error("unknown corpus format");
}

inline CorpusFormat corpus_format_from_name(const std::string& name) {
  if (name == "jsonl") return CorpusFormat::jsonl;
  if (name == "csv") return CorpusFormat::csv;
  throw std::runtime_error("unknown corpus format: " + name);
}

inline void write_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
  std::string out;
  for (const Paper& p : corpus.papers) {
    nlohmann::json j;
    j["id"] = p.id;
    j["title"] = p.title;
    j["abstract"] = p.abstract;
    j["keywords"] = p.keywords;
    j["venue"] = p.venue;
    j["year"] = p.year;
    j["authors"] = p.authors;
    j["citations"] = p.citations;
    out += j.dump();
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace revmap
