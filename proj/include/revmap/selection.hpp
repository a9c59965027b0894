#pragma once

#include <algorithm>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "revmap/corpus.hpp"
#include "revmap/parallel.hpp"
#include "revmap/taxonomy.hpp"
#include "revmap/text.hpp"
#include "revmap/util.hpp"

namespace revmap {

class QueryParseError : public std::runtime_error {
 public:
  QueryParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Inclusion-criteria expression tree:
//   expr     := and_expr (OR and_expr)*
//   and_expr := unary (AND unary)*
//   unary    := NOT unary | '(' expr ')' | predicate
//   predicate:= term("...") | topic("...") | venue_in("a", "b", ...)
//             | year_in(lo[, hi])
struct Query {
  enum class Node { And, Or, Not, TermPred, TopicPred, VenuePred, YearPred };

  struct Expr {
    Node kind;
    std::vector<Expr> children;       // And/Or/Not
    Term text;                        // TermPred/TopicPred (normalized)
    std::vector<std::string> values;  // VenuePred (normalized)
    int year_lo = 0, year_hi = 0;     // YearPred
  };

  Expr root;
  std::string source_text;
};

namespace detail {

class QueryParser {
 public:
  explicit QueryParser(const std::string& text) : text_(text) {}

  Query parse() {
    Query q;
    q.source_text = text_;
    q.root = parse_or();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return q;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw QueryParseError(why, pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool eat_keyword(const char* kw) {
    skip_ws();
    std::size_t len = std::strlen(kw);
    if (pos_ + len > text_.size()) return false;
    for (std::size_t i = 0; i < len; ++i)
      if (std::toupper(static_cast<unsigned char>(text_[pos_ + i])) != kw[i]) return false;
    std::size_t end = pos_ + len;
    if (end < text_.size() &&
        (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_'))
      return false;
    pos_ = end;
    return true;
  }

  bool eat_char(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::string parse_string() {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != '"') fail("expected string literal");
    std::size_t start = ++pos_;
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '"') out += text_[pos_++];
    if (pos_ >= text_.size()) {
      pos_ = start - 1;
      fail("unterminated string literal");
    }
    ++pos_;  // closing quote
    return out;
  }

  int parse_int() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    if (pos_ == start) fail("expected integer");
    return std::stoi(text_.substr(start, pos_ - start));
  }

  std::string parse_ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    if (pos_ == start) fail("expected predicate");
    return text_.substr(start, pos_ - start);
  }

  Query::Expr parse_or() {
    Query::Expr left = parse_and();
    while (eat_keyword("OR")) {
      Query::Expr node;
      node.kind = Query::Node::Or;
      node.children.push_back(std::move(left));
      node.children.push_back(parse_and());
      left = std::move(node);
    }
    return left;
  }

  Query::Expr parse_and() {
    Query::Expr left = parse_unary();
    while (eat_keyword("AND")) {
      Query::Expr node;
      node.kind = Query::Node::And;
      node.children.push_back(std::move(left));
      node.children.push_back(parse_unary());
      left = std::move(node);
    }
    return left;
  }

  Query::Expr parse_unary() {
    if (eat_keyword("NOT")) {
      Query::Expr node;
      node.kind = Query::Node::Not;
      node.children.push_back(parse_unary());
      return node;
    }
    if (eat_char('(')) {
      Query::Expr inner = parse_or();
      if (!eat_char(')')) fail("expected ')'");
      return inner;
    }
    return parse_predicate();
  }

  Query::Expr parse_predicate() {
    skip_ws();
    std::size_t at = pos_;
    std::string name = parse_ident();
    if (!eat_char('(')) fail("expected '(' after predicate name");
    Query::Expr node;
    if (name == "term" || name == "topic") {
      node.kind = name == "term" ? Query::Node::TermPred : Query::Node::TopicPred;
      node.text = normalize_term(parse_string());
      if (node.text.empty()) {
        pos_ = at;
        fail("empty term in predicate");
      }
    } else if (name == "venue_in") {
      node.kind = Query::Node::VenuePred;
      node.values.push_back(normalize_term(parse_string()));
      while (eat_char(',')) node.values.push_back(normalize_term(parse_string()));
    } else if (name == "year_in") {
      node.kind = Query::Node::YearPred;
      node.year_lo = parse_int();
      node.year_hi = eat_char(',') ? parse_int() : node.year_lo;
      if (node.year_hi < node.year_lo) {
        pos_ = at;
        fail("empty year range");
      }
    } else {
      pos_ = at;
      fail("unknown predicate '" + name + "'");
    }
    if (!eat_char(')')) fail("expected ')'");
    return node;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Query parse_query(const std::string& text) {
  return detail::QueryParser(text).parse();
}

struct SelectionOptions {
  bool word_boundary = false;  // match phrases only at word boundaries
};

// Normalized searchable fields of a paper: title, abstract, each keyword.
// Phrases never match across field joins.
inline std::vector<std::string> paper_fields(const Paper& p) {
  std::vector<std::string> out;
  out.push_back(normalize_term(p.title));
  out.push_back(normalize_term(p.abstract));
  for (const auto& k : p.keywords) out.push_back(normalize_term(k));
  return out;
}

inline bool field_contains(const std::string& field, const Term& phrase,
                           bool word_boundary) {
  if (phrase.empty()) return false;
  std::size_t pos = 0;
  while ((pos = field.find(phrase, pos)) != std::string::npos) {
    if (!word_boundary) return true;
    bool left_ok = pos == 0 || field[pos - 1] == ' ';
    std::size_t end = pos + phrase.size();
    bool right_ok = end == field.size() || field[end] == ' ';
    if (left_ok && right_ok) return true;
    ++pos;
  }
  return false;
}

inline bool any_field_contains(const std::vector<std::string>& fields,
                               const Term& phrase, bool word_boundary = false) {
  for (const auto& f : fields)
    if (field_contains(f, phrase, word_boundary)) return true;
  return false;
}

// A named selection of primary studies plus the provenance needed to replay it.
struct StudySet {
  std::string name;
  std::string query;             // source text of the inclusion criteria
  std::string taxonomy_version;  // digest of the taxonomy the query ran against
  std::vector<std::string> ids;  // sorted
};

namespace detail {

inline bool eval_query(const Query::Expr& e, const Paper& p,
                       const std::vector<std::string>& fields,
                       const std::map<std::string, std::vector<Term>>& topic_terms,
                       const SelectionOptions& opts) {
  switch (e.kind) {
    case Query::Node::And:
      return eval_query(e.children[0], p, fields, topic_terms, opts) &&
             eval_query(e.children[1], p, fields, topic_terms, opts);
    case Query::Node::Or:
      return eval_query(e.children[0], p, fields, topic_terms, opts) ||
             eval_query(e.children[1], p, fields, topic_terms, opts);
    case Query::Node::Not:
      return !eval_query(e.children[0], p, fields, topic_terms, opts);
    case Query::Node::TermPred:
      return any_field_contains(fields, e.text, opts.word_boundary);
    case Query::Node::TopicPred: {
      const auto& terms = topic_terms.at(e.text);
      for (const auto& t : terms)
        if (any_field_contains(fields, t, opts.word_boundary)) return true;
      return false;
    }
    case Query::Node::VenuePred: {
      Term v = normalize_term(p.venue);
      return std::find(e.values.begin(), e.values.end(), v) != e.values.end();
    }
    case Query::Node::YearPred:
      return p.year >= e.year_lo && p.year <= e.year_hi;
  }
  return false;
}

inline void collect_topic_preds(const Query::Expr& e, std::set<std::string>& out) {
  if (e.kind == Query::Node::TopicPred) out.insert(e.text);
  for (const auto& c : e.children) collect_topic_preds(c, out);
}

}  // namespace detail

// Evaluates the query over every paper; topic predicates expand through the
// taxonomy's term closure. Result ids are sorted.
inline StudySet select_studies(const Corpus& corpus, const Taxonomy& tax,
                               const Query& query, const std::string& name,
                               const SelectionOptions& opts = {}, int workers = 1) {
  std::set<std::string> topic_ids;
  detail::collect_topic_preds(query.root, topic_ids);
  std::map<std::string, std::vector<Term>> topic_terms;
  for (const auto& id : topic_ids) {
    if (!tax.has_topic(id))
      throw std::runtime_error("select_studies: unknown topic id in query: " + id);
    auto terms = tax.expand_terms(id);
    topic_terms[id] = std::vector<Term>(terms.begin(), terms.end());
  }
  auto flags = parallel_map(corpus.size(), workers, [&](std::size_t i) -> char {
    const Paper& p = corpus.papers[i];
    auto fields = paper_fields(p);
    return detail::eval_query(query.root, p, fields, topic_terms, opts) ? 1 : 0;
  });
  StudySet out;
  out.name = name;
  out.query = query.source_text;
  out.taxonomy_version = taxonomy_digest(tax);
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (flags[i]) out.ids.push_back(corpus.papers[i].id);
  std::sort(out.ids.begin(), out.ids.end());
  return out;
}

inline void save_study_set(const StudySet& s, const std::filesystem::path& path) {
  nlohmann::json j;
  j["name"] = s.name;
  j["query"] = s.query;
  j["taxonomy_version"] = s.taxonomy_version;
  j["ids"] = s.ids;
  write_file(path, j.dump(2) + "\n");
}

inline StudySet load_study_set(const std::filesystem::path& path) {
  auto j = nlohmann::json::parse(read_file(path));
  StudySet s;
  s.name = j.at("name").get<std::string>();
  s.query = j.at("query").get<std::string>();
  s.taxonomy_version = j.at("taxonomy_version").get<std::string>();
  for (const auto& id : j.at("ids")) s.ids.push_back(id.get<std::string>());
  return s;
}

// Venue list file: one venue per line, '#' comments.
inline std::vector<std::string> load_venue_list(const std::filesystem::path& path) {
  std::vector<std::string> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(line);
  }
  return out;
}

}  // namespace revmap
