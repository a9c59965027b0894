#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "revmap/corpus.hpp"
#include "revmap/parallel.hpp"
#include "revmap/text.hpp"

namespace revmap {

enum class TermSource { keywords_only, keywords_title_abstract };

// Inverted index plus co-occurrence and per-year statistics over normalized
// terms. Immutable once built; safe for concurrent readers.
class TermIndex {
 public:
  struct Neighbor {
    std::uint32_t term;
    long long count;
  };

  static constexpr std::size_t kMinTermLength = 2;

  // Term sets per paper are computed in parallel; accumulation runs in paper
  // order, so the result is independent of the worker count.
  static TermIndex build(const Corpus& corpus,
                         TermSource source = TermSource::keywords_only,
                         int workers = 1) {
    TermIndex ix;
    ix.doc_count_ = corpus.size();
    auto term_sets = parallel_map(corpus.size(), workers, [&](std::size_t i) {
      return paper_terms(corpus.papers[i], source);
    });
    for (std::size_t d = 0; d < corpus.size(); ++d) {
      ix.add_document(corpus.papers[d].id, corpus.papers[d].year, term_sets[d]);
    }
    ix.finalize();
    return ix;
  }

  // Normalized term set a paper contributes; repeats collapse (document
  // frequency semantics). Terms shorter than kMinTermLength are discarded.
  static std::vector<Term> paper_terms(const Paper& p, TermSource source) {
    std::set<Term> terms;
    auto keep = [&](Term t) {
      if (t.size() >= kMinTermLength) terms.insert(std::move(t));
    };
    for (const auto& k : p.keywords) keep(normalize_term(k));
    if (source == TermSource::keywords_title_abstract) {
      for (const std::string* field : {&p.title, &p.abstract}) {
        auto toks = tokenize(normalize_term(*field));
        for (auto& g : ngrams(toks, 1, 3)) keep(std::move(g));
      }
    }
    return {terms.begin(), terms.end()};
  }

  std::size_t doc_count() const { return doc_count_; }

  bool contains(const Term& t) const { return dict_.count(t) > 0; }

  std::optional<std::uint32_t> term_id(const Term& t) const {
    auto it = dict_.find(t);
    if (it == dict_.end()) return std::nullopt;
    return it->second;
  }

  const Term& term_text(std::uint32_t id) const { return term_text_[id]; }

  std::size_t term_count() const { return term_text_.size(); }

  // All indexed terms, sorted.
  std::vector<Term> terms() const {
    std::vector<Term> out = term_text_;
    std::sort(out.begin(), out.end());
    return out;
  }

  long long df(const Term& t) const {
    auto id = term_id(t);
    return id ? static_cast<long long>(postings_[*id].size()) : 0;
  }

  long long df_by_id(std::uint32_t id) const {
    return static_cast<long long>(postings_[id].size());
  }

  // Paper ids containing the term, sorted.
  std::vector<std::string> postings(const Term& t) const {
    auto id = term_id(t);
    if (!id) throw std::out_of_range("unknown term: " + t);
    std::vector<std::string> out;
    out.reserve(postings_[*id].size());
    for (auto d : postings_[*id]) out.push_back(paper_ids_[d]);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::span<const std::uint32_t> posting_ordinals(std::uint32_t id) const {
    return postings_[id];
  }

  // I(x,y): papers containing both terms; I(x,x) equals df(x).
  long long cooccur(const Term& x, const Term& y) const {
    auto ix = term_id(x), iy = term_id(y);
    if (!ix || !iy) return 0;
    if (*ix == *iy) return df_by_id(*ix);
    auto it = pairs_.find(pair_key(*ix, *iy));
    return it == pairs_.end() ? 0 : it->second.total;
  }

  // I(x,y) broken down per year.
  std::map<int, long long> cooccur_by_year(const Term& x, const Term& y) const {
    auto ix = term_id(x), iy = term_id(y);
    if (!ix || !iy) return {};
    if (*ix == *iy) return df_by_year_[*ix];
    auto it = pairs_.find(pair_key(*ix, *iy));
    return it == pairs_.end() ? std::map<int, long long>{} : it->second.by_year;
  }

  const std::map<int, long long>& df_by_year_id(std::uint32_t id) const {
    return df_by_year_[id];
  }

  const std::map<int, long long>* pair_by_year(std::uint32_t a, std::uint32_t b) const {
    auto it = pairs_.find(pair_key(a, b));
    return it == pairs_.end() ? nullptr : &it->second.by_year;
  }

  // First year the term occurs in the corpus.
  int debut(const Term& t) const {
    auto id = term_id(t);
    if (!id) throw std::out_of_range("unknown term: " + t);
    return debut_[*id];
  }

  int debut_by_id(std::uint32_t id) const { return debut_[id]; }

  // Co-occurrence neighbors of a term, sorted by term id; excludes the term
  // itself. These are the vectors the subsumption metrics take cosines over.
  std::span<const Neighbor> neighbors(std::uint32_t id) const { return adj_[id]; }

  // Sparse co-occurrence vector keyed by term text; self entry excluded.
  std::map<Term, long long> context_vector(const Term& t) const {
    auto id = term_id(t);
    if (!id) throw std::out_of_range("unknown term: " + t);
    std::map<Term, long long> out;
    for (const auto& n : adj_[*id]) out[term_text_[n.term]] = n.count;
    return out;
  }

  // Rebuilds the index with terms mapped through `alias` (member -> class
  // representative). A class's postings become the union of its members'.
  TermIndex collapse(const std::map<Term, Term>& alias, int workers = 1) const {
    TermIndex ix;
    ix.doc_count_ = doc_count_;
    auto mapped = parallel_map(doc_terms_.size(), workers, [&](std::size_t d) {
      std::set<Term> terms;
      for (auto tid : doc_terms_[d]) {
        const Term& t = term_text_[tid];
        auto it = alias.find(t);
        terms.insert(it == alias.end() ? t : it->second);
      }
      return std::vector<Term>(terms.begin(), terms.end());
    });
    for (std::size_t d = 0; d < doc_terms_.size(); ++d) {
      ix.add_document(paper_ids_[d], paper_year_[d], mapped[d]);
    }
    ix.finalize();
    return ix;
  }

  // Document ordinals whose term set intersects `any_of`; sorted.
  std::vector<std::uint32_t> docs_with_any(const std::vector<Term>& any_of) const {
    std::set<std::uint32_t> docs;
    for (const auto& t : any_of) {
      auto id = term_id(t);
      if (!id) continue;
      docs.insert(postings_[*id].begin(), postings_[*id].end());
    }
    return {docs.begin(), docs.end()};
  }

  const std::vector<std::uint32_t>& doc_terms(std::uint32_t doc) const {
    return doc_terms_[doc];
  }

  const std::string& paper_id(std::uint32_t doc) const { return paper_ids_[doc]; }

 private:
  struct PairStats {
    long long total = 0;
    std::map<int, long long> by_year;
  };

  static std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }

  std::uint32_t intern(const Term& t) {
    auto it = dict_.find(t);
    if (it != dict_.end()) return it->second;
    auto id = static_cast<std::uint32_t>(term_text_.size());
    dict_.emplace(t, id);
    term_text_.push_back(t);
    postings_.emplace_back();
    df_by_year_.emplace_back();
    debut_.push_back(0);
    return id;
  }

  void add_document(const std::string& paper_id, int year,
                    const std::vector<Term>& terms) {
    auto doc = static_cast<std::uint32_t>(paper_ids_.size());
    paper_ids_.push_back(paper_id);
    paper_year_.push_back(year);
    std::vector<std::uint32_t> ids;
    ids.reserve(terms.size());
    for (const auto& t : terms) ids.push_back(intern(t));
    std::sort(ids.begin(), ids.end());
    for (auto id : ids) {
      if (postings_[id].empty()) debut_[id] = year;
      else debut_[id] = std::min(debut_[id], year);
      postings_[id].push_back(doc);
      df_by_year_[id][year] += 1;
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t j = i + 1; j < ids.size(); ++j) {
        auto& ps = pairs_[pair_key(ids[i], ids[j])];
        ps.total += 1;
        ps.by_year[year] += 1;
      }
    }
    doc_terms_.push_back(std::move(ids));
  }

  void finalize() {
    adj_.assign(term_text_.size(), {});
    for (const auto& [key, ps] : pairs_) {
      auto a = static_cast<std::uint32_t>(key >> 32);
      auto b = static_cast<std::uint32_t>(key & 0xffffffffu);
      adj_[a].push_back({b, ps.total});
      adj_[b].push_back({a, ps.total});
    }
    for (auto& v : adj_) {
      std::sort(v.begin(), v.end(),
                [](const Neighbor& l, const Neighbor& r) { return l.term < r.term; });
    }
  }

  std::size_t doc_count_ = 0;
  std::vector<std::string> paper_ids_;
  std::vector<int> paper_year_;
  std::vector<std::vector<std::uint32_t>> doc_terms_;
  std::unordered_map<Term, std::uint32_t> dict_;
  std::vector<Term> term_text_;
  std::vector<std::vector<std::uint32_t>> postings_;
  std::vector<std::map<int, long long>> df_by_year_;
  std::vector<int> debut_;
  std::unordered_map<std::uint64_t, PairStats> pairs_;
  std::vector<std::vector<Neighbor>> adj_;
};

inline TermIndex build_index(const Corpus& corpus,
                             TermSource source = TermSource::keywords_only,
                             int workers = 1) {
  if (corpus.size() == 0) throw std::runtime_error("build_index: empty corpus");
  return TermIndex::build(corpus, source, workers);
}

inline std::map<Term, long long> context_vector(const TermIndex& index, const Term& t) {
  return index.context_vector(t);
}

}  // namespace revmap
