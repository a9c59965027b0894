#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "revmap/index.hpp"
#include "revmap/parallel.hpp"
#include "revmap/taxonomy.hpp"
#include "revmap/text.hpp"

namespace revmap {

// Knobs of the taxonomy-learning loop. threshold and gamma are the published
// values; the rest cover steps the algorithm leaves open, so replications can
// state their configuration exactly.
struct MetricParams {
  double threshold = 0.25;         // hierarchy cutoff on max(hr, tr)
  double gamma = 2.0;              // temporal decay exponent, > 0
  int candidate_min_cooccur = 3;   // min I(k, cand) to consider a candidate
  int candidate_top_n = 50;        // candidates kept per keyword
  double merge_label_sim = 0.9;    // label similarity gate for merging
  double merge_context_sim = 0.6;  // context cosine gate for merging
  double generic_df_ceiling = 0.2; // df fraction above which a term is "too generic"
  int min_df = 5;                  // df floor below which a term is noise
  int max_iterations = 10;         // discovery loop cap
  std::set<Term> stoplist;
  int workers = 1;
  bool log_progress = false;       // per-iteration log to standard error
};

inline std::set<Term> load_stoplist(const std::filesystem::path& path) {
  std::set<Term> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    Term t = normalize_term(line);
    if (!t.empty()) out.insert(t);
  }
  return out;
}

// Most co-occurring keywords of k: count >= candidate_min_cooccur, sorted by
// count descending with lexicographic tie-break, truncated to candidate_top_n.
inline std::vector<Term> get_candidates(const TermIndex& index, const Term& k,
                                        const MetricParams& params) {
  auto id = index.term_id(k);
  if (!id) throw std::out_of_range("get_candidates: unknown term: " + k);
  std::vector<std::pair<long long, Term>> ranked;
  for (const auto& n : index.neighbors(*id)) {
    if (n.count >= params.candidate_min_cooccur)
      ranked.emplace_back(n.count, index.term_text(n.term));
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (params.candidate_top_n >= 0 &&
      ranked.size() > static_cast<std::size_t>(params.candidate_top_n))
    ranked.resize(params.candidate_top_n);
  std::vector<Term> out;
  out.reserve(ranked.size());
  for (auto& [c, t] : ranked) out.push_back(std::move(t));
  return out;
}

// Cosine of the two co-occurrence vectors with the entries for a and b
// themselves removed from both; 0 when either vector is empty.
inline double cosine_context(const TermIndex& index, const Term& a, const Term& b) {
  auto ia = index.term_id(a), ib = index.term_id(b);
  if (!ia) throw std::out_of_range("cosine_context: unknown term: " + a);
  if (!ib) throw std::out_of_range("cosine_context: unknown term: " + b);
  auto va = index.neighbors(*ia);
  auto vb = index.neighbors(*ib);
  auto excluded = [&](std::uint32_t t) { return t == *ia || t == *ib; };
  double dot = 0.0, na = 0.0, nb = 0.0;
  std::size_t i = 0, j = 0;
  while (i < va.size() && j < vb.size()) {
    if (excluded(va[i].term)) { ++i; continue; }
    if (excluded(vb[j].term)) { ++j; continue; }
    if (va[i].term == vb[j].term) {
      dot += static_cast<double>(va[i].count) * static_cast<double>(vb[j].count);
      ++i;
      ++j;
    } else if (va[i].term < vb[j].term) {
      ++i;
    } else {
      ++j;
    }
  }
  for (const auto& n : va)
    if (!excluded(n.term)) na += static_cast<double>(n.count) * static_cast<double>(n.count);
  for (const auto& n : vb)
    if (!excluded(n.term)) nb += static_cast<double>(n.count) * static_cast<double>(n.count);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Subsumption score: (I(x,y)/I(x,x) - I(y,x)/I(y,y)) * c(x,y) * n(x,y), where
// n is the normalized Levenshtein distance and c the context cosine. Positive
// values signal that x is the narrower keyword.
inline double hr_metric(const TermIndex& index, const Term& x, const Term& y,
                        const MetricParams&) {
  if (x == y) return 0.0;
  long long ixx = index.df(x);
  long long iyy = index.df(y);
  if (ixx <= 0) throw std::invalid_argument("hr_metric: zero self-count: " + x);
  if (iyy <= 0) throw std::invalid_argument("hr_metric: zero self-count: " + y);
  long long ixy = index.cooccur(x, y);
  double diff = static_cast<double>(ixy) / static_cast<double>(ixx) -
                static_cast<double>(ixy) / static_cast<double>(iyy);
  return diff * cosine_context(index, x, y) * levenshtein_norm(x, y);
}

// Temporal variant: every count involving the pair is reweighted by
// w(year, x) = (year - debut(x) + 1)^(-gamma), emphasising the first years of
// x. Years before debut(x) weigh 0. On a single-year corpus all weights are 1
// and the value equals hr_metric exactly.
inline double tr_metric(const TermIndex& index, const Term& x, const Term& y,
                        const MetricParams& params) {
  if (x == y) return 0.0;
  auto ix = index.term_id(x), iy = index.term_id(y);
  if (!ix || index.df_by_id(*ix) <= 0)
    throw std::invalid_argument("tr_metric: zero self-count: " + x);
  if (!iy || index.df_by_id(*iy) <= 0)
    throw std::invalid_argument("tr_metric: zero self-count: " + y);
  int debut = index.debut_by_id(*ix);
  auto weight = [&](int year) -> double {
    if (year < debut) return 0.0;
    return std::pow(static_cast<double>(year - debut + 1), -params.gamma);
  };
  auto weighted = [&](const std::map<int, long long>& by_year) {
    double sum = 0.0;
    for (const auto& [year, count] : by_year)
      sum += weight(year) * static_cast<double>(count);
    return sum;
  };
  const auto* pxy = index.pair_by_year(*ix, *iy);
  double wxy = pxy ? weighted(*pxy) : 0.0;
  double wxx = weighted(index.df_by_year_id(*ix));
  double wyy = weighted(index.df_by_year_id(*iy));
  double rx = wxx > 0.0 ? wxy / wxx : 0.0;
  double ry = wyy > 0.0 ? wxy / wyy : 0.0;
  return (rx - ry) * cosine_context(index, x, y) * levenshtein_norm(x, y);
}

// Decides what, if anything, holds between x and y. Constraints dominate the
// metrics; then the hierarchy test on max(hr, tr); then the merge test.
inline std::optional<Relation> infer_relationship(
    const TermIndex& index, const Term& x, const Term& y,
    const MetricParams& params, const std::vector<Constraint>& constraints = {}) {
  if (x == y) return std::nullopt;
  for (const auto& c : constraints) {
    bool fwd = c.a == x && c.b == y;
    bool rev = c.a == y && c.b == x;
    if (!fwd && !rev) continue;
    switch (c.kind) {
      case ConstraintKind::must_unrelated:
        return std::nullopt;
      case ConstraintKind::must_broader:
        return Relation{c.a, c.b, RelationKind::broaderGeneric, 0.0};
      case ConstraintKind::must_equivalent:
        return Relation{std::min(x, y), std::max(x, y),
                        RelationKind::relatedEquivalent, 0.0};
    }
  }
  double hr = hr_metric(index, x, y, params);
  double tr = tr_metric(index, x, y, params);
  double score = std::max(hr, tr);
  if (score >= params.threshold)
    return Relation{x, y, RelationKind::broaderGeneric, score};
  double label_sim = 1.0 - levenshtein_norm(x, y);
  if (label_sim >= params.merge_label_sim &&
      cosine_context(index, x, y) >= params.merge_context_sim)
    return Relation{std::min(x, y), std::max(x, y), RelationKind::relatedEquivalent,
                    label_sim};
  return std::nullopt;
}

namespace detail {

// First broaderGeneric cycle in deterministic (sorted) DFS order, as the list
// of its edges; empty when the subgraph is a DAG.
inline std::vector<Relation> find_cycle(const std::set<Relation>& relations) {
  std::map<std::string, std::vector<Relation>> adj;
  std::map<std::string, int> state;  // 0 fresh, 1 on stack, 2 done
  for (const auto& r : relations) {
    if (r.kind != RelationKind::broaderGeneric) continue;
    adj[r.source].push_back(r);
    state.emplace(r.source, 0);
    state.emplace(r.target, 0);
  }
  struct Frame {
    std::string node;
    std::size_t next = 0;
  };
  for (const auto& [start, s] : state) {
    if (state[start] != 0) continue;
    std::vector<Frame> stack{{start}};
    std::vector<Relation> path;  // edge into stack[i] is path[i-1]
    state[start] = 1;
    while (!stack.empty()) {
      Frame& f = stack.back();
      auto it = adj.find(f.node);
      if (it != adj.end() && f.next < it->second.size()) {
        const Relation& edge = it->second[f.next++];
        int& ts = state[edge.target];
        if (ts == 1) {
          std::vector<Relation> cycle;
          std::size_t pos = stack.size();
          while (pos > 0 && stack[pos - 1].node != edge.target) --pos;
          for (std::size_t i = pos; i < stack.size(); ++i) cycle.push_back(path[i - 1]);
          cycle.push_back(edge);
          return cycle;
        }
        if (ts == 0) {
          ts = 1;
          stack.push_back({edge.target});
          path.push_back(edge);
        }
      } else {
        state[f.node] = 2;
        stack.pop_back();
        if (!path.empty()) path.pop_back();
      }
    }
  }
  return {};
}

}  // namespace detail

// Breaks broaderGeneric cycles by repeatedly deleting the minimum-weight edge
// of a detected cycle (lexicographic tie-break). Non-hierarchy relations pass
// through untouched. Edges listed in `protected_edges` (expert-asserted) are
// never deleted; a cycle made only of them is an error.
inline std::set<Relation> remove_loops(
    std::set<Relation> relations,
    const std::set<std::pair<std::string, std::string>>& protected_edges = {}) {
  while (true) {
    auto cycle = detail::find_cycle(relations);
    if (cycle.empty()) return relations;
    const Relation* victim = nullptr;
    for (const auto& e : cycle) {
      if (protected_edges.count({e.source, e.target})) continue;
      if (!victim || e.weight < victim->weight ||
          (e.weight == victim->weight &&
           std::tie(e.source, e.target) < std::tie(victim->source, victim->target)))
        victim = &e;
    }
    if (!victim) {
      std::string names;
      for (const auto& e : cycle) names += e.source + " -> " + e.target + "; ";
      throw TaxonomyError("cycle of expert-asserted relations: " + names);
    }
    relations.erase(*victim);
  }
}

// Partition produced by keyword merging: every input term lands in exactly one
// class; the representative carries the class in later iterations.
struct MergeResult {
  std::map<Term, Term> representative;      // member -> class representative
  std::map<Term, std::vector<Term>> classes;  // representative -> sorted members
  std::set<Relation> relations;             // hierarchy re-targeted to representatives

  bool merged_anything() const {
    for (const auto& [rep, members] : classes)
      if (members.size() > 1) return true;
    return false;
  }
};

// Union-find closure over relatedEquivalent pairs. The class representative is
// the member with the highest document frequency (lexicographic tie-break).
// Unions that would join a must_unrelated pair are skipped. Splitting of
// ambiguous keywords is not performed; merging is the only rewrite.
inline MergeResult merge_keywords(const TermIndex& index,
                                  const std::set<Relation>& relations,
                                  const MetricParams&,
                                  const std::vector<Constraint>& constraints = {}) {
  std::map<Term, Term> parent;
  auto ensure = [&](const Term& t) { parent.emplace(t, t); };
  std::function<Term(const Term&)> find = [&](const Term& t) -> Term {
    Term cur = t;
    while (parent.at(cur) != cur) cur = parent.at(cur);
    return cur;
  };
  for (const auto& r : relations) {
    ensure(r.source);
    ensure(r.target);
  }
  std::vector<std::pair<Term, Term>> unrelated;
  for (const auto& c : constraints)
    if (c.kind == ConstraintKind::must_unrelated) unrelated.emplace_back(c.a, c.b);
  for (const auto& r : relations) {
    if (r.kind != RelationKind::relatedEquivalent) continue;
    Term ra = find(r.source), rb = find(r.target);
    if (ra == rb) continue;
    parent[ra] = rb;
    bool violates = false;
    for (const auto& [a, b] : unrelated) {
      if (!parent.count(a) || !parent.count(b)) continue;
      if (find(a) == find(b)) { violates = true; break; }
    }
    if (violates) parent[ra] = ra;  // undo
  }

  MergeResult out;
  std::map<Term, std::vector<Term>> groups;
  for (const auto& [t, p] : parent) groups[find(t)].push_back(t);
  for (auto& [root, members] : groups) {
    std::sort(members.begin(), members.end());
    Term rep = members.front();
    long long best = index.df(rep);
    for (const auto& m : members) {
      long long d = index.df(m);
      if (d > best) { best = d; rep = m; }
    }
    for (const auto& m : members) out.representative[m] = rep;
    out.classes[rep] = members;
  }
  for (const auto& r : relations) {
    if (r.kind == RelationKind::relatedEquivalent &&
        out.representative.at(r.source) == out.representative.at(r.target))
      continue;  // consumed by the merge
    Relation moved = r;
    moved.source = out.representative.at(r.source);
    moved.target = out.representative.at(r.target);
    if (moved.source == moved.target) continue;
    if (moved.kind == RelationKind::relatedEquivalent && moved.target < moved.source)
      std::swap(moved.source, moved.target);
    auto it = out.relations.find(moved);
    if (it != out.relations.end()) {
      if (it->weight < moved.weight) {
        out.relations.erase(it);
        out.relations.insert(moved);
      }
    } else {
      out.relations.insert(moved);
    }
  }
  return out;
}

// Drops terms that are too generic (df above the ceiling fraction), too rare
// (df below min_df), or stoplisted. Input order is preserved.
inline std::vector<Term> filter_topics(const TermIndex& index,
                                       const std::vector<Term>& terms,
                                       const MetricParams& params) {
  double ceiling = params.generic_df_ceiling * static_cast<double>(index.doc_count());
  std::vector<Term> out;
  for (const auto& t : terms) {
    long long d = index.df(t);
    if (static_cast<double>(d) > ceiling) continue;
    if (d < params.min_df) continue;
    if (params.stoplist.count(t)) continue;
    out.push_back(t);
  }
  return out;
}

namespace detail {

inline void upsert_relation(std::set<Relation>& relations, Relation r) {
  if (r.kind == RelationKind::relatedEquivalent && r.target < r.source)
    std::swap(r.source, r.target);
  auto it = relations.find(r);
  if (it != relations.end()) {
    if (it->weight >= r.weight) return;
    relations.erase(it);
  }
  relations.insert(std::move(r));
}

}  // namespace detail

// The full learning loop: process the frontier against its candidate
// keywords, infer relations, remove loops, merge equivalent keywords, grow
// the frontier with newly discovered keywords, and finish with topic
// filtering and taxonomy generation. Deterministic for fixed inputs,
// independent of the worker count.
inline Taxonomy run_klink(const TermIndex& index, const std::set<Term>& seeds,
                          const MetricParams& params,
                          const std::vector<Constraint>& constraints = {}) {
  if (seeds.empty()) throw std::invalid_argument("run_klink: empty seed set");
  for (const auto& s : seeds)
    if (!index.contains(s))
      throw std::invalid_argument("run_klink: seed not indexed: " + s);

  const TermIndex* cur = &index;
  std::optional<TermIndex> collapsed;
  std::map<Term, Term> alias;  // original term -> current representative
  auto aliased = [&](const Term& t) {
    auto it = alias.find(t);
    return it == alias.end() ? t : it->second;
  };
  auto current_constraints = [&]() {
    std::vector<Constraint> cs;
    for (auto c : constraints) {
      c.a = aliased(c.a);
      c.b = aliased(c.b);
      if (c.a != c.b) cs.push_back(std::move(c));
    }
    return cs;
  };
  auto protected_edges = [&]() {
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& c : constraints)
      if (c.kind == ConstraintKind::must_broader)
        out.insert({aliased(c.a), aliased(c.b)});
    return out;
  };

  std::set<Relation> relations;
  for (const auto& c : constraints) {
    if (c.kind == ConstraintKind::must_broader)
      detail::upsert_relation(relations,
                              {c.a, c.b, RelationKind::broaderGeneric, 0.0});
    else if (c.kind == ConstraintKind::must_equivalent)
      detail::upsert_relation(relations, {std::min(c.a, c.b), std::max(c.a, c.b),
                                          RelationKind::relatedEquivalent, 0.0});
  }

  std::set<Term> processed;
  std::vector<Term> frontier(seeds.begin(), seeds.end());
  int iter = 0;
  while (!frontier.empty() && iter < params.max_iterations) {
    ++iter;
    for (const auto& k : frontier) processed.insert(k);
    std::set<Term> discovered;
    std::vector<std::pair<Term, Term>> pairs;
    for (const auto& k1 : frontier) {
      for (const auto& k2 : get_candidates(*cur, k1, params)) {
        pairs.emplace_back(k1, k2);
        if (!processed.count(k2)) discovered.insert(k2);
      }
    }
    auto cons = current_constraints();
    auto inferred =
        parallel_map(pairs.size(), params.workers, [&](std::size_t i) {
          return infer_relationship(*cur, pairs[i].first, pairs[i].second, params,
                                    cons);
        });
    for (auto& r : inferred)
      if (r) detail::upsert_relation(relations, std::move(*r));
    if (params.log_progress) {
      std::cerr << "klink iteration " << iter << ": " << processed.size()
                << " keywords processed, " << relations.size() << " relations, "
                << discovered.size() << " discovered\n";
      if (iter == 1)
        std::cerr << "klink: ambiguous-keyword splitting is a no-op; "
                     "only merging is applied\n";
    }
    relations = remove_loops(std::move(relations), protected_edges());
    auto merge = merge_keywords(*cur, relations, params, cons);
    if (merge.merged_anything()) {
      relations = std::move(merge.relations);
      for (auto& [orig, rep] : alias) {
        auto it = merge.representative.find(rep);
        if (it != merge.representative.end()) rep = it->second;
      }
      for (const auto& [member, rep] : merge.representative) {
        if (member != rep) alias.emplace(member, rep);
      }
      collapsed = cur->collapse(merge.representative, params.workers);
      cur = &*collapsed;
      std::set<Term> remapped;
      for (const auto& t : processed) remapped.insert(aliased(t));
      processed = std::move(remapped);
      std::set<Term> disc2;
      for (const auto& t : discovered) {
        Term r = aliased(t);
        if (!processed.count(r)) disc2.insert(r);
      }
      discovered = std::move(disc2);
    }
    frontier.assign(discovered.begin(), discovered.end());
  }

  std::vector<Term> all_terms(processed.begin(), processed.end());
  auto kept = filter_topics(*cur, all_terms, params);
  std::set<Term> keep(kept.begin(), kept.end());
  // Seeds and constraint endpoints survive filtering: the output must contain
  // the seed topic and satisfy every supplied constraint.
  for (const auto& s : seeds) keep.insert(aliased(s));
  for (const auto& c : constraints) {
    if (c.kind == ConstraintKind::must_unrelated) continue;
    keep.insert(aliased(c.a));
    keep.insert(aliased(c.b));
  }

  std::map<Term, std::set<Term>> member_labels;
  for (const auto& [orig, rep] : alias) member_labels[rep].insert(orig);

  Taxonomy tax;
  for (const auto& t : keep) {
    Topic topic{t, t, {}};
    auto it = member_labels.find(t);
    if (it != member_labels.end()) topic.alt_labels = it->second;
    topic.alt_labels.erase(t);
    tax.add_topic(std::move(topic));
  }
  for (const auto& r : relations) {
    if (tax.has_topic(r.source) && tax.has_topic(r.target)) tax.add_relation(r);
  }
  for (const auto& c : constraints) {
    if (c.kind != ConstraintKind::must_unrelated) continue;
    Term a = aliased(c.a), b = aliased(c.b);
    for (RelationKind k : {RelationKind::broaderGeneric, RelationKind::relatedEquivalent,
                           RelationKind::contributesTo}) {
      tax.remove_relation(a, b, k);
      tax.remove_relation(b, a, k);
    }
  }
  for (const auto& c : constraints) tax.add_constraint(c);
  tax.validate();
  return tax;
}

}  // namespace revmap
