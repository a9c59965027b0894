#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "revmap/corpus.hpp"
#include "revmap/parallel.hpp"
#include "revmap/selection.hpp"
#include "revmap/taxonomy.hpp"
#include "revmap/text.hpp"

namespace revmap {

struct ClassifierConfig {
  double sim_threshold_t = 0.94;  // n-gram/label similarity gate
  int tfidf_top_n = 30;           // ranked terms considered for mapping
  double tfidf_map_sim = 0.8;     // label similarity gate for tf-idf terms
  double lda_topic_prob_j = 0.1;  // min inferred topic probability
  double lda_term_prob_k = 0.01;  // min term probability within a topic
  double lda_map_sim = 0.8;       // label similarity gate for model terms
};

// Inverse document frequencies supplied as an external model file.
struct IdfModel {
  std::map<Term, double> idf;
  long long corpus_size = 0;
};

inline IdfModel load_idf_model(const std::filesystem::path& path) {
  auto j = nlohmann::json::parse(read_file(path));
  IdfModel m;
  m.corpus_size = j.at("corpus_size").get<long long>();
  for (auto it = j.at("idf").begin(); it != j.at("idf").end(); ++it)
    m.idf[it.key()] = it.value().get<double>();
  return m;
}

inline void save_idf_model(const IdfModel& m, const std::filesystem::path& path) {
  nlohmann::json j;
  j["corpus_size"] = m.corpus_size;
  j["idf"] = m.idf;
  write_file(path, j.dump(2) + "\n");
}

// Topic-term distributions of an externally trained topic model.
struct LdaModel {
  struct LdaTopic {
    std::string name;
    std::map<Term, double> term_probs;
  };
  std::vector<LdaTopic> topics;
};

inline LdaModel load_lda_model(const std::filesystem::path& path) {
  auto j = nlohmann::json::parse(read_file(path));
  LdaModel m;
  for (const auto& t : j.at("topics")) {
    LdaModel::LdaTopic topic;
    if (t.contains("name")) topic.name = t.at("name").get<std::string>();
    for (auto it = t.at("terms").begin(); it != t.at("terms").end(); ++it)
      topic.term_probs[it.key()] = it.value().get<double>();
    m.topics.push_back(std::move(topic));
  }
  return m;
}

inline void save_lda_model(const LdaModel& m, const std::filesystem::path& path) {
  nlohmann::json j;
  j["topics"] = nlohmann::json::array();
  for (const auto& t : m.topics) {
    nlohmann::json jt;
    if (!t.name.empty()) jt["name"] = t.name;
    jt["terms"] = t.term_probs;
    j["topics"].push_back(jt);
  }
  write_file(path, j.dump(2) + "\n");
}

namespace detail {

// (1,2,3)-grams over the normalized fields; phrases never span fields.
inline std::vector<Term> paper_ngrams(const Paper& p) {
  std::vector<Term> out;
  for (const auto& field : paper_fields(p)) {
    auto toks = tokenize(field);
    for (auto& g : ngrams(toks, 1, 3)) out.push_back(std::move(g));
  }
  return out;
}

inline std::map<Term, long long> paper_ngram_counts(const Paper& p) {
  std::map<Term, long long> out;
  for (auto& g : paper_ngrams(p)) out[g] += 1;
  return out;
}

// Similarity with a cheap length-difference upper bound before the DP.
inline bool similar_at_least(const std::string& a, const std::string& b,
                             double threshold) {
  std::size_t la = a.size(), lb = b.size();
  if (la == 0 || lb == 0) return false;
  std::size_t diff = la > lb ? la - lb : lb - la;
  double best_possible =
      1.0 - static_cast<double>(diff) / static_cast<double>(std::max(la, lb));
  if (best_possible < threshold) return false;
  return levenshtein_similarity(a, b) >= threshold;
}

inline std::map<std::string, std::vector<Term>> expansion_map(const Taxonomy& tax) {
  std::map<std::string, std::vector<Term>> out;
  for (const auto& [id, t] : tax.topics()) {
    auto terms = tax.expand_terms(id);
    out[id] = std::vector<Term>(terms.begin(), terms.end());
  }
  return out;
}

inline std::set<std::string> classify_dm_with(
    const Paper& p, const std::map<std::string, std::vector<Term>>& expanded) {
  auto fields = paper_fields(p);
  std::set<std::string> out;
  for (const auto& [id, terms] : expanded) {
    for (const auto& t : terms) {
      if (any_field_contains(fields, t)) {
        out.insert(id);
        break;
      }
    }
  }
  return out;
}

// Topics with a label close to any term in `candidates`.
inline std::set<std::string> map_terms_to_topics(const std::vector<Term>& candidates,
                                                 const Taxonomy& tax,
                                                 double threshold) {
  std::set<std::string> out;
  for (const auto& [id, topic] : tax.topics()) {
    bool hit = false;
    for (const auto& label : topic.all_labels()) {
      for (const auto& c : candidates) {
        if (similar_at_least(label, c, threshold)) {
          hit = true;
          break;
        }
      }
      if (hit) break;
    }
    if (hit) out.insert(id);
  }
  return out;
}

}  // namespace detail

// Direct mapping: a topic is assigned when any term of its expansion closure
// appears verbatim in the paper's title, abstract, or keywords.
inline std::set<std::string> classify_dm(const Paper& p, const Taxonomy& tax) {
  return detail::classify_dm_with(p, detail::expansion_map(tax));
}

// N-gram similarity matching: topics having a label whose Levenshtein
// similarity with any extracted (1..3)-gram reaches sim_threshold_t.
inline std::set<std::string> classify_sim(const Paper& p, const Taxonomy& tax,
                                          const ClassifierConfig& cfg) {
  auto grams = detail::paper_ngrams(p);
  std::sort(grams.begin(), grams.end());
  grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
  return detail::map_terms_to_topics(grams, tax, cfg.sim_threshold_t);
}

// TF-IDF mapping: rank the paper's n-grams by tf*idf, keep the top
// tfidf_top_n, map them to topic labels by similarity.
inline std::set<std::string> classify_tfidf(const Paper& p, const IdfModel& model,
                                            const Taxonomy& tax,
                                            const ClassifierConfig& cfg) {
  if (model.idf.empty()) throw std::runtime_error("classify_tfidf: empty idf model");
  auto counts = detail::paper_ngram_counts(p);
  std::vector<std::pair<double, Term>> scored;
  for (const auto& [term, tf] : counts) {
    auto it = model.idf.find(term);
    if (it == model.idf.end()) continue;  // unseen terms carry no idf evidence
    double score = static_cast<double>(tf) * it->second;
    if (score > 0.0) scored.emplace_back(score, term);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (cfg.tfidf_top_n >= 0 &&
      scored.size() > static_cast<std::size_t>(cfg.tfidf_top_n))
    scored.resize(cfg.tfidf_top_n);
  std::vector<Term> top;
  top.reserve(scored.size());
  for (auto& [s, t] : scored) top.push_back(std::move(t));
  return detail::map_terms_to_topics(top, tax, cfg.tfidf_map_sim);
}

// Score of the paper against one model topic: normalized dot product of the
// paper's term-frequency vector with the topic's term distribution.
inline double lda_topic_score(const std::map<Term, long long>& tf,
                              const LdaModel::LdaTopic& topic) {
  double total = 0.0, dot = 0.0;
  for (const auto& [term, count] : tf) {
    total += static_cast<double>(count);
    auto it = topic.term_probs.find(term);
    if (it != topic.term_probs.end()) dot += static_cast<double>(count) * it->second;
  }
  return total > 0.0 ? dot / total : 0.0;
}

// Model mapping: keep model topics scoring >= j, collect their terms with
// probability >= k, map those terms to taxonomy labels by similarity.
inline std::set<std::string> classify_lda_map(const Paper& p, const LdaModel& model,
                                              const Taxonomy& tax,
                                              const ClassifierConfig& cfg) {
  if (model.topics.empty()) throw std::runtime_error("classify_lda_map: empty model");
  auto tf = detail::paper_ngram_counts(p);
  std::set<Term> picked;
  for (const auto& topic : model.topics) {
    if (lda_topic_score(tf, topic) < cfg.lda_topic_prob_j) continue;
    for (const auto& [term, prob] : topic.term_probs)
      if (prob >= cfg.lda_term_prob_k) picked.insert(term);
  }
  std::vector<Term> terms(picked.begin(), picked.end());
  return detail::map_terms_to_topics(terms, tax, cfg.lda_map_sim);
}

enum class ClassifierMethod { dm, sim, tfidf, lda };

inline ClassifierMethod classifier_from_name(const std::string& name) {
  if (name == "dm") return ClassifierMethod::dm;
  if (name == "sim") return ClassifierMethod::sim;
  if (name == "tfidf") return ClassifierMethod::tfidf;
  if (name == "lda") return ClassifierMethod::lda;
  throw std::runtime_error("unknown classifier: " + name);
}

inline const char* to_string(ClassifierMethod m) {
  switch (m) {
    case ClassifierMethod::dm: return "dm";
    case ClassifierMethod::sim: return "sim";
    case ClassifierMethod::tfidf: return "tfidf";
    case ClassifierMethod::lda: return "lda";
  }
  return "?";
}

// Per-paper topic assignments plus everything needed to replay the run.
struct ClassificationResult {
  std::string classifier;
  nlohmann::json config;
  std::string taxonomy_version;
  std::map<std::string, std::set<std::string>> assignments;  // paper id -> topics
};

inline nlohmann::json config_snapshot(ClassifierMethod method,
                                      const ClassifierConfig& cfg) {
  nlohmann::json j;
  switch (method) {
    case ClassifierMethod::dm:
      break;
    case ClassifierMethod::sim:
      j["sim_threshold_t"] = cfg.sim_threshold_t;
      break;
    case ClassifierMethod::tfidf:
      j["tfidf_top_n"] = cfg.tfidf_top_n;
      j["tfidf_map_sim"] = cfg.tfidf_map_sim;
      break;
    case ClassifierMethod::lda:
      j["lda_topic_prob_j"] = cfg.lda_topic_prob_j;
      j["lda_term_prob_k"] = cfg.lda_term_prob_k;
      j["lda_map_sim"] = cfg.lda_map_sim;
      break;
  }
  return j;
}

struct ClassifyModels {
  const IdfModel* idf = nullptr;
  const LdaModel* lda = nullptr;
};

// Batch driver: applies one classifier to every paper of the study set.
inline ClassificationResult classify_set(const StudySet& studies, const Corpus& corpus,
                                         ClassifierMethod method, const Taxonomy& tax,
                                         const ClassifierConfig& cfg,
                                         ClassifyModels models = {}, int workers = 1) {
  if (method == ClassifierMethod::tfidf && !models.idf)
    throw std::runtime_error("classify_set: tfidf requires an idf model");
  if (method == ClassifierMethod::lda && !models.lda)
    throw std::runtime_error("classify_set: lda requires an lda model");
  auto expanded = detail::expansion_map(tax);
  auto one = [&](const Paper& p) -> std::set<std::string> {
    switch (method) {
      case ClassifierMethod::dm: return detail::classify_dm_with(p, expanded);
      case ClassifierMethod::sim: return classify_sim(p, tax, cfg);
      case ClassifierMethod::tfidf: return classify_tfidf(p, *models.idf, tax, cfg);
      case ClassifierMethod::lda: return classify_lda_map(p, *models.lda, tax, cfg);
    }
    return {};
  };
  std::vector<const Paper*> papers;
  papers.reserve(studies.ids.size());
  for (const auto& id : studies.ids) {
    const Paper* p = corpus.find(id);
    if (!p) throw std::runtime_error("classify_set: study paper not in corpus: " + id);
    papers.push_back(p);
  }
  auto results = parallel_map(papers.size(), workers, [&](std::size_t i) {
    try {
      return one(*papers[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error("classify_set: paper " + papers[i]->id + ": " + e.what());
    }
  });
  ClassificationResult out;
  out.classifier = to_string(method);
  out.config = config_snapshot(method, cfg);
  out.taxonomy_version = taxonomy_digest(tax);
  for (std::size_t i = 0; i < papers.size(); ++i)
    out.assignments[papers[i]->id] = std::move(results[i]);
  return out;
}

inline void save_classification(const ClassificationResult& r,
                                const std::filesystem::path& path) {
  nlohmann::json j;
  j["classifier"] = r.classifier;
  j["config"] = r.config;
  j["taxonomy_version"] = r.taxonomy_version;
  nlohmann::json aj = nlohmann::json::object();
  for (const auto& [id, topics] : r.assignments) aj[id] = topics;
  j["assignments"] = aj;
  write_file(path, j.dump(2) + "\n");
}

inline ClassificationResult load_classification(const std::filesystem::path& path) {
  auto j = nlohmann::json::parse(read_file(path));
  ClassificationResult r;
  r.classifier = j.at("classifier").get<std::string>();
  r.config = j.at("config");
  r.taxonomy_version = j.at("taxonomy_version").get<std::string>();
  for (auto it = j.at("assignments").begin(); it != j.at("assignments").end(); ++it) {
    std::set<std::string> topics;
    for (const auto& t : it.value()) topics.insert(t.get<std::string>());
    r.assignments[it.key()] = std::move(topics);
  }
  return r;
}

}  // namespace revmap
