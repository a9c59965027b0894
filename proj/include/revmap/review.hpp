#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "revmap/index.hpp"
#include "revmap/taxonomy.hpp"
#include "revmap/text.hpp"
#include "revmap/util.hpp"

namespace revmap {

// One row of the reviewable tree sheet. `edit` is the expert's annotation:
// empty | DELETE | ADD:<parent_id> | MOVE:<new_parent_id> | EQUIV:<topic_id>.
struct SheetRow {
  int depth = 0;
  std::string topic_id;
  std::vector<Term> labels;  // preferred first, then alternates
  long long paper_count = 0;
  std::string edit;
};

// The round-trip artifact: a pre-order tree of the taxonomy branch plus the
// most popular corpus terms as a reminder appendix.
struct ReviewSheet {
  std::vector<SheetRow> rows;
  std::vector<std::pair<Term, long long>> popular_terms;
};

// Pre-order sheet for the subbranch rooted at `root`. A topic with several
// parents appears once, under its first parent in traversal order. paper_count
// is the number of papers matching any term of the topic's expansion, per the
// reference index. `restrict_terms`, when non-empty, limits the popular-terms
// appendix to papers containing at least one of them.
inline ReviewSheet build_sheet(const Taxonomy& tax, const TermIndex& index,
                               const std::string& root, int top_terms_n = 500,
                               const std::vector<Term>& restrict_terms = {}) {
  if (!tax.has_topic(root)) throw TaxonomyError("unknown root topic: " + root);
  Taxonomy branch = tax.subbranch(root);
  ReviewSheet sheet;
  std::set<std::string> visited;
  struct Item {
    std::string id;
    int depth;
  };
  std::vector<Item> stack{{root, 0}};
  while (!stack.empty()) {
    Item cur = stack.back();
    stack.pop_back();
    if (!visited.insert(cur.id).second) continue;
    const Topic& t = branch.topic(cur.id);
    auto expanded = tax.expand_terms(cur.id);
    std::vector<Term> terms(expanded.begin(), expanded.end());
    long long count = static_cast<long long>(index.docs_with_any(terms).size());
    sheet.rows.push_back(SheetRow{cur.depth, cur.id, t.all_labels(), count, ""});
    auto kids = branch.children(cur.id);
    for (auto it = kids.rbegin(); it != kids.rend(); ++it)
      stack.push_back({*it, cur.depth + 1});
  }

  if (top_terms_n > 0) {
    std::vector<std::uint32_t> docs;
    if (restrict_terms.empty()) {
      docs.resize(index.doc_count());
      for (std::uint32_t d = 0; d < docs.size(); ++d) docs[d] = d;
    } else {
      docs = index.docs_with_any(restrict_terms);
    }
    std::map<Term, long long> freq;
    for (auto d : docs)
      for (auto tid : index.doc_terms(d)) freq[index.term_text(tid)] += 1;
    std::vector<std::pair<long long, Term>> ranked;
    for (const auto& [t, c] : freq) ranked.emplace_back(c, t);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    if (ranked.size() > static_cast<std::size_t>(top_terms_n))
      ranked.resize(static_cast<std::size_t>(top_terms_n));
    for (auto& [c, t] : ranked) sheet.popular_terms.emplace_back(std::move(t), c);
  }
  return sheet;
}

inline std::string sheet_to_csv(const ReviewSheet& sheet) {
  std::string out = "depth,topic_id,labels,paper_count,edit\n";
  for (const auto& r : sheet.rows) {
    std::string labels;
    for (std::size_t i = 0; i < r.labels.size(); ++i) {
      if (i) labels += '|';
      labels += r.labels[i];
    }
    out += std::to_string(r.depth) + "," + csv_escape(r.topic_id) + "," +
           csv_escape(labels) + "," + std::to_string(r.paper_count) + "," +
           csv_escape(r.edit) + "\n";
  }
  if (!sheet.popular_terms.empty()) {
    out += "\nterm,frequency\n";
    for (const auto& [t, c] : sheet.popular_terms)
      out += csv_escape(t) + "," + std::to_string(c) + "\n";
  }
  return out;
}

inline void write_sheet(const ReviewSheet& sheet, const std::filesystem::path& path) {
  write_file(path, sheet_to_csv(sheet));
}

// build_sheet + write_sheet in one step.
inline ReviewSheet export_sheet(const Taxonomy& tax, const TermIndex& index,
                                const std::string& root,
                                const std::filesystem::path& path,
                                int top_terms_n = 500,
                                const std::vector<Term>& restrict_terms = {}) {
  ReviewSheet sheet = build_sheet(tax, index, root, top_terms_n, restrict_terms);
  write_sheet(sheet, path);
  return sheet;
}

inline ReviewSheet read_sheet(const std::filesystem::path& path) {
  ReviewSheet sheet;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  bool in_appendix = false;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (seen_header) in_appendix = true;
      continue;
    }
    auto fields = csv_parse_line(line);
    if (!seen_header) {
      if (fields.size() < 5 || fields[0] != "depth")
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                 ": expected sheet header depth,topic_id,labels,paper_count,edit");
      seen_header = true;
      continue;
    }
    if (in_appendix) {
      if (fields.size() >= 2 && fields[0] == "term") continue;  // appendix header
      if (fields.size() < 2) continue;
      sheet.popular_terms.emplace_back(fields[0], std::strtoll(fields[1].c_str(), nullptr, 10));
      continue;
    }
    if (fields.size() < 5)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": sheet row needs 5 columns");
    SheetRow r;
    r.depth = static_cast<int>(std::strtol(fields[0].c_str(), nullptr, 10));
    r.topic_id = fields[1];
    for (auto& l : split(fields[2], '|'))
      if (!l.empty()) r.labels.push_back(l);
    r.paper_count = std::strtoll(fields[3].c_str(), nullptr, 10);
    r.edit = fields[4];
    sheet.rows.push_back(std::move(r));
  }
  if (!seen_header)
    throw std::runtime_error(path.string() + ": empty review sheet");
  return sheet;
}

enum class FeedbackKind {
  delete_category,
  add_category,
  delete_relationship,
  add_relationship
};

struct FeedbackOp {
  FeedbackKind kind = FeedbackKind::delete_category;
  std::string topic;   // delete_category
  std::string label;   // add_category
  std::string parent;  // add_category
  std::string source;  // *_relationship
  std::string target;  // *_relationship
  RelationKind rel_kind = RelationKind::broaderGeneric;

  // Canonical identity used for voting across experts.
  std::string key() const {
    switch (kind) {
      case FeedbackKind::delete_category:
        return "del_cat|" + topic;
      case FeedbackKind::add_category:
        return "add_cat|" + label + "|" + parent;
      case FeedbackKind::delete_relationship:
      case FeedbackKind::add_relationship: {
        std::string s = source, t = target;
        if (rel_kind == RelationKind::relatedEquivalent && t < s) std::swap(s, t);
        return std::string(kind == FeedbackKind::add_relationship ? "add_rel|" : "del_rel|") +
               s + "|" + t + "|" + to_string(rel_kind);
      }
    }
    return "?";
  }

  friend bool operator<(const FeedbackOp& a, const FeedbackOp& b) {
    return a.key() < b.key();
  }
  friend bool operator==(const FeedbackOp& a, const FeedbackOp& b) {
    return a.key() == b.key();
  }
};

struct FeedbackOps {
  std::string expert_id;
  std::vector<FeedbackOp> ops;
};

namespace detail {

// Parent of each row in a pre-order sheet, derived from the depth column.
inline std::map<std::string, std::string> sheet_parents(const ReviewSheet& sheet,
                                                        const std::string& origin) {
  std::map<std::string, std::string> parent;
  std::vector<std::string> stack;  // stack[d] = row id at depth d
  for (std::size_t i = 0; i < sheet.rows.size(); ++i) {
    const SheetRow& r = sheet.rows[i];
    if (r.depth < 0 || static_cast<std::size_t>(r.depth) > stack.size())
      throw std::runtime_error(origin + ": row " + std::to_string(i + 1) +
                               " has invalid depth " + std::to_string(r.depth));
    stack.resize(static_cast<std::size_t>(r.depth));
    std::string key = r.topic_id.empty()
                          ? (r.labels.empty() ? "" : normalize_term(r.labels.front()))
                          : r.topic_id;
    parent[key] = stack.empty() ? "" : stack.back();
    stack.push_back(key);
  }
  return parent;
}

}  // namespace detail

// Diffs an annotated sheet against the original it was produced from,
// expressed as the four feedback op kinds. Detects both explicit annotations
// (DELETE / ADD / MOVE / EQUIV) and structural edits (removed or physically
// re-parented rows).
inline FeedbackOps import_feedback(const ReviewSheet& annotated,
                                   const ReviewSheet& original,
                                   const std::string& expert_id) {
  FeedbackOps out;
  out.expert_id = expert_id;
  std::set<std::string> original_ids;
  for (const auto& r : original.rows) original_ids.insert(r.topic_id);
  auto orig_parent = detail::sheet_parents(original, "original sheet");
  auto new_parent = detail::sheet_parents(annotated, "annotated sheet");

  std::set<std::string> seen;
  std::set<std::string> deleted;
  for (const auto& r : annotated.rows) {
    bool known = original_ids.count(r.topic_id) > 0;
    if (known) seen.insert(r.topic_id);

    std::string edit = r.edit;
    if (edit == "DELETE") {
      if (!known)
        throw std::runtime_error("DELETE references unknown topic: " + r.topic_id);
      FeedbackOp op;
      op.kind = FeedbackKind::delete_category;
      op.topic = r.topic_id;
      out.ops.push_back(op);
      deleted.insert(r.topic_id);
      continue;
    }
    if (edit.rfind("ADD:", 0) == 0) {
      FeedbackOp op;
      op.kind = FeedbackKind::add_category;
      op.label = r.labels.empty() ? r.topic_id : r.labels.front();
      op.parent = edit.substr(4);
      if (op.label.empty())
        throw std::runtime_error("ADD row without a label");
      if (!original_ids.count(op.parent))
        throw std::runtime_error("ADD references unknown parent: " + op.parent);
      out.ops.push_back(op);
      continue;
    }
    if (edit.rfind("MOVE:", 0) == 0) {
      if (!known)
        throw std::runtime_error("MOVE references unknown topic: " + r.topic_id);
      std::string np = edit.substr(5);
      if (!original_ids.count(np))
        throw std::runtime_error("MOVE references unknown parent: " + np);
      std::string op_parent = orig_parent.at(r.topic_id);
      if (!op_parent.empty()) {
        FeedbackOp del;
        del.kind = FeedbackKind::delete_relationship;
        del.source = r.topic_id;
        del.target = op_parent;
        del.rel_kind = RelationKind::broaderGeneric;
        out.ops.push_back(del);
      }
      FeedbackOp add;
      add.kind = FeedbackKind::add_relationship;
      add.source = r.topic_id;
      add.target = np;
      add.rel_kind = RelationKind::broaderGeneric;
      out.ops.push_back(add);
      continue;
    }
    if (edit.rfind("EQUIV:", 0) == 0) {
      if (!known)
        throw std::runtime_error("EQUIV references unknown topic: " + r.topic_id);
      std::string other = edit.substr(6);
      if (!original_ids.count(other))
        throw std::runtime_error("EQUIV references unknown topic: " + other);
      FeedbackOp op;
      op.kind = FeedbackKind::add_relationship;
      op.source = r.topic_id;
      op.target = other;
      op.rel_kind = RelationKind::relatedEquivalent;
      out.ops.push_back(op);
      continue;
    }
    if (!edit.empty())
      throw std::runtime_error("malformed edit annotation '" + edit + "' on row " +
                               r.topic_id);
    if (!known) {
      // physically added row: new category under its positional parent
      if (r.labels.empty() && r.topic_id.empty())
        throw std::runtime_error("added row without id or label");
      FeedbackOp op;
      op.kind = FeedbackKind::add_category;
      op.label = r.labels.empty() ? r.topic_id : r.labels.front();
      std::string key = r.topic_id.empty() ? normalize_term(r.labels.front()) : r.topic_id;
      op.parent = new_parent.at(key);
      if (op.parent.empty())
        throw std::runtime_error("added row '" + op.label + "' has no parent row");
      out.ops.push_back(op);
      continue;
    }
    // physically moved row: parent differs between the two sheets
    const std::string& was = orig_parent.at(r.topic_id);
    const std::string& now = new_parent.at(r.topic_id);
    if (was != now && !now.empty()) {
      if (!was.empty()) {
        FeedbackOp del;
        del.kind = FeedbackKind::delete_relationship;
        del.source = r.topic_id;
        del.target = was;
        del.rel_kind = RelationKind::broaderGeneric;
        out.ops.push_back(del);
      }
      FeedbackOp add;
      add.kind = FeedbackKind::add_relationship;
      add.source = r.topic_id;
      add.target = now;
      add.rel_kind = RelationKind::broaderGeneric;
      out.ops.push_back(add);
    }
  }
  // rows struck from the sheet entirely
  for (const auto& r : original.rows) {
    if (!seen.count(r.topic_id) && !deleted.count(r.topic_id)) {
      FeedbackOp op;
      op.kind = FeedbackKind::delete_category;
      op.topic = r.topic_id;
      out.ops.push_back(op);
    }
  }
  return out;
}

inline FeedbackOps import_feedback(const std::filesystem::path& annotated_file,
                                   const ReviewSheet& original,
                                   const std::string& expert_id = "") {
  return import_feedback(read_sheet(annotated_file), original,
                         expert_id.empty() ? annotated_file.stem().string() : expert_id);
}

struct MergedFeedback {
  FeedbackOps merged;
  std::vector<std::string> warnings;
};

// Majority vote across experts: an op survives when proposed by at least
// `quorum` experts (default floor(n/2)+1). Opposed add/delete pairs on the
// same element resolve by count; a tie drops both with a warning.
inline MergedFeedback merge_feedback(const std::vector<FeedbackOps>& all,
                                     int quorum = 0) {
  if (all.empty()) throw std::invalid_argument("merge_feedback: no experts");
  int n = static_cast<int>(all.size());
  if (quorum <= 0) quorum = n / 2 + 1;
  if (quorum > n)
    throw std::invalid_argument("merge_feedback: quorum exceeds expert count");

  std::map<std::string, std::pair<FeedbackOp, int>> votes;
  for (const auto& expert : all) {
    std::set<std::string> counted;  // an expert votes once per op
    for (const auto& op : expert.ops) {
      std::string k = op.key();
      if (!counted.insert(k).second) continue;
      auto it = votes.find(k);
      if (it == votes.end()) votes.emplace(k, std::make_pair(op, 1));
      else it->second.second += 1;
    }
  }

  // element key shared by an add op and its opposing delete
  auto element_key = [](const FeedbackOp& op) -> std::string {
    switch (op.kind) {
      case FeedbackKind::delete_category:
        return "cat|" + op.topic;
      case FeedbackKind::add_category:
        return "cat|" + normalize_term(op.label);
      case FeedbackKind::delete_relationship:
      case FeedbackKind::add_relationship: {
        std::string s = op.source, t = op.target;
        if (op.rel_kind == RelationKind::relatedEquivalent && t < s) std::swap(s, t);
        return "rel|" + s + "|" + t + "|" + to_string(op.rel_kind);
      }
    }
    return "?";
  };
  auto is_add = [](const FeedbackOp& op) {
    return op.kind == FeedbackKind::add_category ||
           op.kind == FeedbackKind::add_relationship;
  };

  std::map<std::string, std::pair<int, int>> tally;  // element -> (add, del) votes
  for (const auto& [k, entry] : votes) {
    auto& t = tally[element_key(entry.first)];
    if (is_add(entry.first)) t.first = std::max(t.first, entry.second);
    else t.second = std::max(t.second, entry.second);
  }

  MergedFeedback out;
  out.merged.expert_id = "merged(quorum=" + std::to_string(quorum) + ")";
  for (const auto& [k, entry] : votes) {
    const auto& [op, count] = entry;
    if (count < quorum) continue;
    const auto& [adds, dels] = tally[element_key(op)];
    if (adds >= quorum && dels >= quorum) {
      if (adds == dels) {
        if (is_add(op))  // warn once per element
          out.warnings.push_back("tie on " + element_key(op) + ": no change");
        continue;
      }
      if (is_add(op) != (adds > dels)) continue;  // outvoted side dropped
    }
    out.merged.ops.push_back(op);
  }
  std::sort(out.merged.ops.begin(), out.merged.ops.end());
  return out;
}

struct ApplyResult {
  Taxonomy taxonomy;
  std::vector<Constraint> constraints;  // also recorded inside the taxonomy
};

// Applies feedback ops to the taxonomy. Every delete emits must_unrelated and
// every add emits must_broader / must_equivalent, so relearning preserves the
// corrections. Deleting an internal topic promotes its children to its former
// parents.
inline ApplyResult apply_feedback(const Taxonomy& tax, const FeedbackOps& feedback) {
  ApplyResult out;
  out.taxonomy = tax;
  Taxonomy& t = out.taxonomy;
  auto emit = [&](Constraint c) {
    if (c.kind != ConstraintKind::must_broader && c.b < c.a) std::swap(c.a, c.b);
    t.add_constraint(c);
    out.constraints.push_back(std::move(c));
  };

  std::vector<FeedbackOp> ops = feedback.ops;
  auto rank = [](const FeedbackOp& op) {
    switch (op.kind) {
      case FeedbackKind::delete_relationship: return 0;
      case FeedbackKind::delete_category: return 1;
      case FeedbackKind::add_category: return 2;
      case FeedbackKind::add_relationship: return 3;
    }
    return 4;
  };
  std::stable_sort(ops.begin(), ops.end(), [&](const FeedbackOp& a, const FeedbackOp& b) {
    if (rank(a) != rank(b)) return rank(a) < rank(b);
    return a.key() < b.key();
  });

  for (const auto& op : ops) {
    switch (op.kind) {
      case FeedbackKind::delete_relationship: {
        if (!t.remove_relation(op.source, op.target, op.rel_kind))
          throw TaxonomyError("delete_relationship: no such relation " + op.source +
                              " -> " + op.target);
        emit({op.source, op.target, ConstraintKind::must_unrelated});
        break;
      }
      case FeedbackKind::delete_category: {
        if (!t.has_topic(op.topic))
          throw TaxonomyError("delete_category: unknown topic " + op.topic);
        auto parents = t.parents(op.topic);
        auto children = t.children(op.topic);
        t.remove_topic(op.topic);
        for (const auto& c : children)
          for (const auto& p : parents)
            if (c != p) t.add_relation({c, p, RelationKind::broaderGeneric, 0.0});
        for (const auto& p : parents)
          emit({op.topic, p, ConstraintKind::must_unrelated});
        break;
      }
      case FeedbackKind::add_category: {
        std::string id = normalize_term(op.label);
        if (id.empty()) throw TaxonomyError("add_category: empty label");
        if (t.has_topic(id))
          throw TaxonomyError("add_category: topic already exists: " + id);
        if (!t.has_topic(op.parent))
          throw TaxonomyError("add_category: unknown parent " + op.parent);
        t.add_topic(Topic{id, id, {}});
        t.add_relation({id, op.parent, RelationKind::broaderGeneric, 0.0});
        emit({id, op.parent, ConstraintKind::must_broader});
        break;
      }
      case FeedbackKind::add_relationship: {
        if (!t.has_topic(op.source))
          throw TaxonomyError("add_relationship: unknown topic " + op.source);
        if (!t.has_topic(op.target))
          throw TaxonomyError("add_relationship: unknown topic " + op.target);
        if (op.rel_kind == RelationKind::broaderGeneric) {
          auto desc = t.descendants(op.source);
          if (desc.count(op.target) || op.source == op.target)
            throw TaxonomyError("add_relationship: edge " + op.source + " -> " +
                                op.target + " would create a cycle");
          t.add_relation({op.source, op.target, RelationKind::broaderGeneric, 0.0});
          emit({op.source, op.target, ConstraintKind::must_broader});
        } else {
          t.add_relation({op.source, op.target, op.rel_kind, 0.0});
          if (op.rel_kind == RelationKind::relatedEquivalent)
            emit({op.source, op.target, ConstraintKind::must_equivalent});
        }
        break;
      }
    }
  }
  t.validate();
  return out;
}

}  // namespace revmap
