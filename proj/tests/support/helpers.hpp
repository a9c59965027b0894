#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "revmap/corpus.hpp"
#include "revmap/index.hpp"
#include "revmap/selection.hpp"
#include "revmap/taxonomy.hpp"

namespace testsupport {

inline std::filesystem::path data_dir() { return REVMAP_DATA_DIR; }

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("revmap_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline revmap::Paper paper(std::string id, std::vector<std::string> keywords,
                           int year = 2010, std::string title = "",
                           std::string abstract_text = "", long long citations = 0,
                           std::string venue = "VENUE") {
  revmap::Paper p;
  p.id = std::move(id);
  p.title = std::move(title);
  p.abstract = std::move(abstract_text);
  p.keywords = std::move(keywords);
  p.venue = std::move(venue);
  p.year = year;
  p.authors = {"A"};
  p.citations = citations;
  return p;
}

inline revmap::Corpus corpus_of(std::vector<revmap::Paper> papers) {
  revmap::Corpus c;
  for (auto& p : papers) c.add(std::move(p));
  return c;
}

// Independent nested-loop recount of I(x, y) over a corpus; the oracle the
// TermIndex is checked against.
inline long long brute_cooccur(const revmap::Corpus& corpus, revmap::TermSource source,
                               const std::string& x, const std::string& y) {
  long long count = 0;
  for (const auto& p : corpus.papers) {
    auto terms = revmap::TermIndex::paper_terms(p, source);
    bool has_x = std::find(terms.begin(), terms.end(), x) != terms.end();
    bool has_y = std::find(terms.begin(), terms.end(), y) != terms.end();
    if (has_x && has_y) ++count;
  }
  return count;
}

// Reachability over narrower->broader edges by plain DFS, independent of the
// Taxonomy implementation.
inline std::set<std::string> brute_descendants(const revmap::Taxonomy& tax,
                                               const std::string& root) {
  std::set<std::string> out;
  std::vector<std::string> stack{root};
  while (!stack.empty()) {
    auto cur = stack.back();
    stack.pop_back();
    for (const auto& r : tax.relations()) {
      if (r.kind == revmap::RelationKind::broaderGeneric && r.target == cur) {
        if (out.insert(r.source).second) stack.push_back(r.source);
      }
    }
  }
  out.erase(root);
  return out;
}

// Brute-force direct-mapping scan: expand every topic closure independently
// and test containment per paper.
inline std::set<std::string> brute_classify_dm(const revmap::Paper& p,
                                               const revmap::Taxonomy& tax) {
  std::set<std::string> out;
  auto fields = revmap::paper_fields(p);
  for (const auto& [id, topic] : tax.topics()) {
    std::set<std::string> terms;
    std::set<std::string> topics_in_scope;
    topics_in_scope.insert(id);
    for (const auto& e : tax.equivalent_topics(id)) topics_in_scope.insert(e);
    for (const auto& d : brute_descendants(tax, id)) {
      topics_in_scope.insert(d);
      for (const auto& e : tax.equivalent_topics(d)) topics_in_scope.insert(e);
    }
    for (const auto& tid : topics_in_scope) {
      const auto& t = tax.topic(tid);
      terms.insert(t.preferred_label);
      terms.insert(t.alt_labels.begin(), t.alt_labels.end());
    }
    for (const auto& term : terms) {
      bool hit = false;
      for (const auto& f : fields) {
        if (f.find(term) != std::string::npos) {
          hit = true;
          break;
        }
      }
      if (hit) {
        out.insert(id);
        break;
      }
    }
  }
  return out;
}

}  // namespace testsupport
