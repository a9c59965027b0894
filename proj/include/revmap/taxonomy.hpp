#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "revmap/text.hpp"
#include "revmap/util.hpp"

namespace revmap {

enum class RelationKind { broaderGeneric, relatedEquivalent, contributesTo };
enum class ConstraintKind { must_broader, must_equivalent, must_unrelated };

inline const char* to_string(RelationKind k) {
  switch (k) {
    case RelationKind::broaderGeneric: return "broaderGeneric";
    case RelationKind::relatedEquivalent: return "relatedEquivalent";
    case RelationKind::contributesTo: return "contributesTo";
  }
  return "?";
}

inline const char* to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::must_broader: return "must_broader";
    case ConstraintKind::must_equivalent: return "must_equivalent";
    case ConstraintKind::must_unrelated: return "must_unrelated";
  }
  return "?";
}

// Directed topic relation. broaderGeneric is stored narrower -> broader;
// relatedEquivalent is symmetric and kept with source < target.
struct Relation {
  std::string source;
  std::string target;
  RelationKind kind = RelationKind::broaderGeneric;
  double weight = 0.0;  // metric score that produced it; 0 for expert-asserted

  friend bool operator<(const Relation& a, const Relation& b) {
    return std::tie(a.source, a.kind, a.target) < std::tie(b.source, b.kind, b.target);
  }
  friend bool operator==(const Relation& a, const Relation& b) {
    return a.source == b.source && a.target == b.target && a.kind == b.kind &&
           a.weight == b.weight;
  }
};

// Expert-asserted prior for relearning. must_broader(a,b): a is a sub-area of
// b. must_equivalent / must_unrelated are symmetric (stored with a < b).
struct Constraint {
  std::string a;
  std::string b;
  ConstraintKind kind = ConstraintKind::must_unrelated;

  friend bool operator<(const Constraint& x, const Constraint& y) {
    return std::tie(x.kind, x.a, x.b) < std::tie(y.kind, y.a, y.b);
  }
  friend bool operator==(const Constraint& x, const Constraint& y) {
    return x.a == y.a && x.b == y.b && x.kind == y.kind;
  }
};

struct Topic {
  std::string id;  // normalized preferred label at creation time; never changes
  Term preferred_label;
  std::set<Term> alt_labels;

  std::vector<Term> all_labels() const {
    std::vector<Term> out{preferred_label};
    for (const auto& l : alt_labels)
      if (l != preferred_label) out.push_back(l);
    return out;
  }
};

class TaxonomyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Taxonomy {
 public:
  const std::map<std::string, Topic>& topics() const { return topics_; }
  const std::set<Relation>& relations() const { return relations_; }
  const std::set<Constraint>& constraints() const { return constraints_; }

  bool has_topic(const std::string& id) const { return topics_.count(id) > 0; }

  const Topic& topic(const std::string& id) const {
    auto it = topics_.find(id);
    if (it == topics_.end()) throw TaxonomyError("unknown topic: " + id);
    return it->second;
  }

  void add_topic(Topic t) {
    if (t.id.empty()) throw TaxonomyError("topic with empty id");
    if (t.preferred_label.empty()) t.preferred_label = t.id;
    t.alt_labels.erase(t.preferred_label);
    if (!topics_.emplace(t.id, t).second)
      throw TaxonomyError("duplicate topic id: " + t.id);
  }

  void remove_topic(const std::string& id) {
    topics_.erase(id);
    for (auto it = relations_.begin(); it != relations_.end();) {
      if (it->source == id || it->target == id) it = relations_.erase(it);
      else ++it;
    }
    for (auto it = constraints_.begin(); it != constraints_.end();) {
      if (it->a == id || it->b == id) it = constraints_.erase(it);
      else ++it;
    }
  }

  void add_label(const std::string& id, const Term& label) {
    auto it = topics_.find(id);
    if (it == topics_.end()) throw TaxonomyError("unknown topic: " + id);
    if (label != it->second.preferred_label) it->second.alt_labels.insert(label);
  }

  void add_relation(Relation r) {
    if (r.source == r.target)
      throw TaxonomyError("self relation on topic: " + r.source);
    if (!has_topic(r.source)) throw TaxonomyError("relation source unknown: " + r.source);
    if (!has_topic(r.target)) throw TaxonomyError("relation target unknown: " + r.target);
    if (r.kind == RelationKind::relatedEquivalent && r.target < r.source)
      std::swap(r.source, r.target);
    auto it = relations_.find(r);
    if (it != relations_.end()) {
      // keep the strongest evidence for a repeated edge
      if (it->weight < r.weight) {
        relations_.erase(it);
        relations_.insert(r);
      }
      return;
    }
    relations_.insert(std::move(r));
  }

  bool remove_relation(const std::string& source, const std::string& target,
                       RelationKind kind) {
    Relation probe{source, target, kind, 0.0};
    if (kind == RelationKind::relatedEquivalent && probe.target < probe.source)
      std::swap(probe.source, probe.target);
    return relations_.erase(probe) > 0;
  }

  bool has_relation(const std::string& source, const std::string& target,
                    RelationKind kind) const {
    Relation probe{source, target, kind, 0.0};
    if (kind == RelationKind::relatedEquivalent && probe.target < probe.source)
      std::swap(probe.source, probe.target);
    return relations_.count(probe) > 0;
  }

  void add_constraint(Constraint c) {
    if (c.a == c.b) throw TaxonomyError("constraint on identical topics: " + c.a);
    if (c.kind != ConstraintKind::must_broader && c.b < c.a) std::swap(c.a, c.b);
    constraints_.insert(std::move(c));
  }

  // Direct broader topics of id (edges id -> parent).
  std::vector<std::string> parents(const std::string& id) const {
    std::vector<std::string> out;
    for (const auto& r : relations_)
      if (r.kind == RelationKind::broaderGeneric && r.source == id)
        out.push_back(r.target);
    return out;
  }

  // Direct narrower topics of id (edges child -> id).
  std::vector<std::string> children(const std::string& id) const {
    std::vector<std::string> out;
    for (const auto& r : relations_)
      if (r.kind == RelationKind::broaderGeneric && r.target == id)
        out.push_back(r.source);
    std::sort(out.begin(), out.end());
    return out;
  }

  // Transitive closure of broaderGeneric edges pointing into `id`;
  // excludes `id` itself.
  std::set<std::string> descendants(const std::string& id) const {
    if (!has_topic(id)) throw TaxonomyError("unknown topic: " + id);
    std::set<std::string> seen;
    std::vector<std::string> stack{id};
    while (!stack.empty()) {
      std::string cur = stack.back();
      stack.pop_back();
      for (const auto& c : children(cur)) {
        if (seen.insert(c).second) stack.push_back(c);
      }
    }
    seen.erase(id);
    return seen;
  }

  // Topics equivalent to id under the symmetric-transitive closure of
  // relatedEquivalent; includes id.
  std::set<std::string> equivalent_topics(const std::string& id) const {
    if (!has_topic(id)) throw TaxonomyError("unknown topic: " + id);
    std::set<std::string> cls{id};
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& r : relations_) {
        if (r.kind != RelationKind::relatedEquivalent) continue;
        if (cls.count(r.source) && cls.insert(r.target).second) grew = true;
        if (cls.count(r.target) && cls.insert(r.source).second) grew = true;
      }
    }
    return cls;
  }

  // The four clauses of the category-to-terms mapping: own labels, labels of
  // equivalents, labels of descendants, labels of the descendants' equivalents.
  std::set<Term> expand_terms(const std::string& id) const {
    std::set<Term> out;
    auto add_labels = [&](const std::string& tid) {
      const Topic& t = topic(tid);
      out.insert(t.preferred_label);
      out.insert(t.alt_labels.begin(), t.alt_labels.end());
    };
    for (const auto& e : equivalent_topics(id)) add_labels(e);
    for (const auto& d : descendants(id))
      for (const auto& e : equivalent_topics(d)) add_labels(e);
    return out;
  }

  // Induced taxonomy on root plus its descendants.
  Taxonomy subbranch(const std::string& root) const {
    std::set<std::string> keep = descendants(root);
    keep.insert(root);
    Taxonomy out;
    for (const auto& id : keep) out.add_topic(topic(id));
    for (const auto& r : relations_)
      if (keep.count(r.source) && keep.count(r.target)) out.relations_.insert(r);
    for (const auto& c : constraints_)
      if (keep.count(c.a) && keep.count(c.b)) out.constraints_.insert(c);
    return out;
  }

  // Topological order of the broaderGeneric subgraph (narrower before
  // broader). Throws naming a cycle if there is one.
  std::vector<std::string> topological_order() const {
    std::map<std::string, int> out_deg;
    std::map<std::string, std::vector<std::string>> rev;
    for (const auto& [id, t] : topics_) out_deg[id] = 0;
    for (const auto& r : relations_) {
      if (r.kind != RelationKind::broaderGeneric) continue;
      out_deg[r.source] += 1;
      rev[r.target].push_back(r.source);
    }
    std::vector<std::string> ready, order;
    for (const auto& [id, d] : out_deg)
      if (d == 0) ready.push_back(id);
    while (!ready.empty()) {
      std::string cur = ready.back();
      ready.pop_back();
      order.push_back(cur);
      for (const auto& c : rev[cur])
        if (--out_deg[c] == 0) ready.push_back(c);
    }
    if (order.size() != topics_.size()) {
      std::string cyc;
      for (const auto& [id, d] : out_deg)
        if (d > 0) cyc += (cyc.empty() ? "" : " -> ") + id;
      throw TaxonomyError("broaderGeneric cycle through: " + cyc);
    }
    return order;
  }

  // Resolves a constraint endpoint: a topic id, or a label owned by a topic.
  const std::string* resolve(const std::string& id_or_label) const {
    auto it = topics_.find(id_or_label);
    if (it != topics_.end()) return &it->first;
    for (const auto& [tid, t] : topics_) {
      if (t.preferred_label == id_or_label || t.alt_labels.count(id_or_label))
        return &tid;
    }
    return nullptr;
  }

  // Checks every structural invariant; throws TaxonomyError naming the
  // offending element.
  void validate() const {
    for (const auto& [id, t] : topics_) {
      if (t.preferred_label.empty())
        throw TaxonomyError("topic without label: " + id);
    }
    topological_order();  // acyclicity
    // labels must not be claimed by two non-equivalent topics
    std::map<Term, std::string> owner;
    for (const auto& [id, t] : topics_) {
      for (const auto& l : t.all_labels()) {
        auto [it, fresh] = owner.emplace(l, id);
        if (!fresh && it->second != id) {
          auto cls = equivalent_topics(id);
          if (!cls.count(it->second))
            throw TaxonomyError("label '" + l + "' owned by both '" + it->second +
                                "' and '" + id + "'");
        }
      }
    }
    for (const auto& c : constraints_) {
      const std::string* ra = resolve(c.a);
      const std::string* rb = resolve(c.b);
      switch (c.kind) {
        case ConstraintKind::must_unrelated: {
          if (!ra || !rb) break;  // vacuously satisfied
          if (*ra == *rb)
            throw TaxonomyError("must_unrelated(" + c.a + ", " + c.b +
                                ") violated: merged into one topic");
          for (const auto& r : relations_) {
            bool touches = (r.source == *ra && r.target == *rb) ||
                           (r.source == *rb && r.target == *ra);
            if (touches)
              throw TaxonomyError("must_unrelated(" + c.a + ", " + c.b +
                                  ") contradicted by " + std::string(to_string(r.kind)) +
                                  "(" + r.source + " -> " + r.target + ")");
          }
          break;
        }
        case ConstraintKind::must_broader: {
          if (!ra || !rb)
            throw TaxonomyError("must_broader(" + c.a + ", " + c.b +
                                ") references unknown topic");
          if (*ra == *rb) break;  // endpoints merged; subsumption is trivial
          auto desc = descendants(*rb);
          if (!desc.count(*ra))
            throw TaxonomyError("must_broader(" + c.a + ", " + c.b + ") unsatisfied");
          break;
        }
        case ConstraintKind::must_equivalent: {
          if (!ra || !rb)
            throw TaxonomyError("must_equivalent(" + c.a + ", " + c.b +
                                ") references unknown topic");
          if (*ra == *rb) break;  // merged into one topic
          if (!equivalent_topics(*ra).count(*rb))
            throw TaxonomyError("must_equivalent(" + c.a + ", " + c.b + ") unsatisfied");
          break;
        }
      }
    }
  }

  friend bool operator==(const Taxonomy& a, const Taxonomy& b) {
    auto key = [](const Taxonomy& t) {
      std::vector<std::tuple<std::string, Term, std::set<Term>>> topics;
      for (const auto& [id, tp] : t.topics_)
        topics.emplace_back(id, tp.preferred_label, tp.alt_labels);
      return topics;
    };
    auto rels = [](const Taxonomy& t) {
      std::vector<std::tuple<std::string, std::string, RelationKind, double>> v;
      for (const auto& r : t.relations_)
        v.emplace_back(r.source, r.target, r.kind, r.weight);
      return v;
    };
    return key(a) == key(b) && rels(a) == rels(b) && a.constraints_ == b.constraints_;
  }

 private:
  std::map<std::string, Topic> topics_;
  std::set<Relation> relations_;
  std::set<Constraint> constraints_;
};

// --- serialization: line-oriented triple file, canonical order ------------

inline std::string serialize_to_string(const Taxonomy& tax) {
  std::string out;
  for (const auto& [id, t] : tax.topics()) {
    out += id + "\tlabel\t" + t.preferred_label + "\n";
    for (const auto& l : t.alt_labels) out += id + "\taltlabel\t" + l + "\n";
  }
  for (const auto& r : tax.relations()) {
    out += r.source + "\t" + to_string(r.kind) + "\t" + r.target + "\t" +
           format_double(r.weight) + "\n";
  }
  for (const auto& c : tax.constraints()) {
    out += c.a + "\t" + to_string(c.kind) + "\t" + c.b + "\n";
  }
  return out;
}

inline void serialize(const Taxonomy& tax, const std::filesystem::path& path) {
  write_file(path, serialize_to_string(tax));
}

inline std::string taxonomy_digest(const Taxonomy& tax) {
  return digest_hex(serialize_to_string(tax));
}

inline Taxonomy deserialize_from_string(const std::string& content,
                                        const std::string& origin = "<string>") {
  struct TopicLines {
    std::string preferred;
    std::set<Term> alts;
  };
  std::map<std::string, TopicLines> topic_lines;
  std::vector<Relation> relations;
  std::vector<Constraint> constraints;
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split(line, '\t');
    auto fail = [&](const std::string& why) {
      throw TaxonomyError(origin + ":" + std::to_string(lineno) + ": " + why);
    };
    if (fields.size() < 3) fail("expected at least 3 tab-separated fields");
    const std::string& kind = fields[1];
    if (kind == "label" || kind == "altlabel") {
      if (fields.size() != 3) fail("label line needs 3 fields");
      auto& tl = topic_lines[fields[0]];
      if (kind == "label") {
        if (!tl.preferred.empty() && tl.preferred != fields[2])
          fail("topic '" + fields[0] + "' has two preferred labels");
        tl.preferred = fields[2];
      } else {
        tl.alts.insert(fields[2]);
      }
    } else if (kind == "broaderGeneric" || kind == "relatedEquivalent" ||
               kind == "contributesTo") {
      if (fields.size() != 4) fail("relation line needs 4 fields");
      RelationKind rk = kind == "broaderGeneric" ? RelationKind::broaderGeneric
                        : kind == "relatedEquivalent" ? RelationKind::relatedEquivalent
                                                      : RelationKind::contributesTo;
      char* end = nullptr;
      double w = std::strtod(fields[3].c_str(), &end);
      if (!end || *end != '\0') fail("bad weight '" + fields[3] + "'");
      relations.push_back(Relation{fields[0], fields[2], rk, w});
    } else if (kind == "must_broader" || kind == "must_equivalent" ||
               kind == "must_unrelated") {
      if (fields.size() != 3) fail("constraint line needs 3 fields");
      ConstraintKind ck = kind == "must_broader" ? ConstraintKind::must_broader
                          : kind == "must_equivalent" ? ConstraintKind::must_equivalent
                                                      : ConstraintKind::must_unrelated;
      constraints.push_back(Constraint{fields[0], fields[2], ck});
    } else {
      fail("unknown line kind '" + kind + "'");
    }
  }
  Taxonomy tax;
  for (auto& [id, tl] : topic_lines) {
    Topic t{id, tl.preferred.empty() ? id : tl.preferred, std::move(tl.alts)};
    tax.add_topic(std::move(t));
  }
  for (auto& r : relations) tax.add_relation(std::move(r));
  for (auto& c : constraints) tax.add_constraint(std::move(c));
  tax.validate();
  return tax;
}

inline Taxonomy deserialize(const std::filesystem::path& path) {
  return deserialize_from_string(read_file(path), path.filename().string());
}

// Reads only the constraint lines of a triple file (prior-review priors for
// relearning).
inline std::vector<Constraint> load_constraints(const std::filesystem::path& path) {
  std::vector<Constraint> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3) continue;
    const std::string& kind = fields[1];
    if (kind == "must_broader")
      out.push_back({fields[0], fields[2], ConstraintKind::must_broader});
    else if (kind == "must_equivalent")
      out.push_back({fields[0], fields[2], ConstraintKind::must_equivalent});
    else if (kind == "must_unrelated")
      out.push_back({fields[0], fields[2], ConstraintKind::must_unrelated});
  }
  return out;
}

}  // namespace revmap
