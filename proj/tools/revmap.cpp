// revmap: ontology-driven systematic-review automation pipeline.
//
// Subcommands mirror the pipeline stages: ingest, learn, review-export,
// review-apply, select, classify, trends, evaluate. Every command writes its
// artifact plus a .manifest.json with input digests and the effective
// configuration, so any run can be replayed byte-for-byte.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "revmap/revmap.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
  int workers = 1;
  std::string config_path;
};

// When a config file is in use, every relative path resolves against the
// config file's directory.
fs::path resolve_path(const GlobalOpts& g, const std::string& p) {
  fs::path path(p);
  if (!g.config_path.empty() && path.is_relative())
    return fs::path(g.config_path).parent_path() / path;
  return path;
}

struct Manifest {
  std::string command;
  json config = json::object();
  json inputs = json::object();
  std::vector<std::string> outputs;

  void input(const fs::path& p) { inputs[p.filename().string()] = revmap::file_digest(p); }

  void write(const fs::path& primary_output) {
    json j;
    j["command"] = command;
    j["tool_version"] = revmap::kVersion;
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    revmap::write_file(primary_output.string() + ".manifest.json", j.dump(2) + "\n");
  }
};

revmap::Corpus load_corpus(const GlobalOpts& g, const std::string& path,
                           const std::string& format, Manifest& mf) {
  fs::path p = resolve_path(g, path);
  mf.input(p);
  auto corpus = revmap::ingest_corpus(p, revmap::corpus_format_from_name(format));
  for (const auto& w : corpus.warnings) std::cerr << "warning: " << w << "\n";
  if (!corpus.warnings.empty())
    std::cerr << "warning: skipped " << corpus.warnings.size() << " malformed rows\n";
  return corpus;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  for (auto& item : revmap::split(csv, ',')) {
    std::string t = item;
    while (!t.empty() && t.front() == ' ') t.erase(t.begin());
    while (!t.empty() && t.back() == ' ') t.pop_back();
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

// ---- subcommand setups ------------------------------------------------------

void setup_ingest(CLI::App& app, GlobalOpts& g) {
  auto* cmd = app.add_subcommand("ingest", "Validate and normalize a corpus file");
  auto corpus = std::make_shared<std::string>();
  auto format = std::make_shared<std::string>("jsonl");
  auto out = std::make_shared<std::string>();
  cmd->add_option("--corpus", *corpus, "input corpus file")->required();
  cmd->add_option("--format", *format, "corpus format")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  cmd->add_option("--out", *out, "normalized corpus output (jsonl)")->required();
  cmd->callback([&g, corpus, format, out] {
    Manifest mf;
    mf.command = "ingest";
    mf.config = {{"format", *format}, {"workers", g.workers}};
    auto c = load_corpus(g, *corpus, *format, mf);
    fs::path outp = resolve_path(g, *out);
    revmap::write_corpus_jsonl(c, outp);
    mf.outputs = {outp.filename().string()};
    mf.write(outp);
    std::cerr << "ingested " << c.size() << " papers ("
              << c.warnings.size() << " rows skipped)\n";
  });
}

void setup_learn(CLI::App& app, GlobalOpts& g) {
  auto* cmd = app.add_subcommand("learn", "Learn a topic taxonomy from the corpus");
  struct Opts {
    std::string corpus, format = "jsonl", seeds, out;
    std::string stoplist, constraints_in, subbranch_root;
    std::string term_source = "keywords";
    revmap::MetricParams params;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--corpus", o->corpus)->required();
  cmd->add_option("--format", o->format)->check(CLI::IsMember({"jsonl", "csv"}));
  cmd->add_option("--seeds", o->seeds, "comma-separated seed keywords")->required();
  cmd->add_option("--out", o->out, "taxonomy triple file")->required();
  cmd->add_option("--term-source", o->term_source)
      ->check(CLI::IsMember({"keywords", "full"}));
  cmd->add_option("--threshold", o->params.threshold);
  cmd->add_option("--gamma", o->params.gamma);
  cmd->add_option("--candidate-min-cooccur", o->params.candidate_min_cooccur);
  cmd->add_option("--candidate-top-n", o->params.candidate_top_n);
  cmd->add_option("--merge-label-sim", o->params.merge_label_sim);
  cmd->add_option("--merge-context-sim", o->params.merge_context_sim);
  cmd->add_option("--generic-df-ceiling", o->params.generic_df_ceiling);
  cmd->add_option("--min-df", o->params.min_df);
  cmd->add_option("--max-iterations", o->params.max_iterations);
  cmd->add_option("--stoplist", o->stoplist, "stoplist file");
  cmd->add_option("--constraints-in", o->constraints_in,
                  "triple file whose constraint lines seed the run");
  cmd->add_option("--subbranch-root", o->subbranch_root,
                  "emit only the subbranch rooted at this topic");
  cmd->callback([&g, o] {
    Manifest mf;
    mf.command = "learn";
    auto corpus = load_corpus(g, o->corpus, o->format, mf);
    auto source = o->term_source == "full"
                      ? revmap::TermSource::keywords_title_abstract
                      : revmap::TermSource::keywords_only;
    auto index = revmap::build_index(corpus, source, g.workers);
    o->params.workers = g.workers;
    o->params.log_progress = true;
    std::vector<revmap::Constraint> constraints;
    if (!o->constraints_in.empty()) {
      fs::path cp = resolve_path(g, o->constraints_in);
      mf.input(cp);
      constraints = revmap::load_constraints(cp);
      std::cerr << "loaded " << constraints.size() << " constraints\n";
    }
    if (!o->stoplist.empty()) {
      fs::path sp = resolve_path(g, o->stoplist);
      mf.input(sp);
      o->params.stoplist = revmap::load_stoplist(sp);
    }
    std::set<revmap::Term> seeds;
    for (const auto& s : split_list(o->seeds)) seeds.insert(revmap::normalize_term(s));
    std::cerr << "learning from " << corpus.size() << " papers, "
              << index.term_count() << " terms\n";
    auto tax = revmap::run_klink(index, seeds, o->params, constraints);
    if (!o->subbranch_root.empty()) tax = tax.subbranch(o->subbranch_root);
    fs::path outp = resolve_path(g, o->out);
    revmap::serialize(tax, outp);
    mf.config = {{"seeds", o->seeds},
                 {"term_source", o->term_source},
                 {"threshold", o->params.threshold},
                 {"gamma", o->params.gamma},
                 {"candidate_min_cooccur", o->params.candidate_min_cooccur},
                 {"candidate_top_n", o->params.candidate_top_n},
                 {"merge_label_sim", o->params.merge_label_sim},
                 {"merge_context_sim", o->params.merge_context_sim},
                 {"generic_df_ceiling", o->params.generic_df_ceiling},
                 {"min_df", o->params.min_df},
                 {"max_iterations", o->params.max_iterations},
                 {"subbranch_root", o->subbranch_root},
                 {"workers", g.workers}};
    mf.outputs = {outp.filename().string()};
    mf.write(outp);
    std::cerr << "taxonomy: " << tax.topics().size() << " topics, "
              << tax.relations().size() << " relations\n";
  });
}

void setup_review_export(CLI::App& app, GlobalOpts& g) {
  auto* cmd = app.add_subcommand("review-export",
                                 "Export a taxonomy branch as a review sheet");
  struct Opts {
    std::string taxonomy, corpus, format = "jsonl", root, out, restrict;
    std::string term_source = "keywords";
    int top_terms = 500;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--taxonomy", o->taxonomy)->required();
  cmd->add_option("--corpus", o->corpus)->required();
  cmd->add_option("--format", o->format)->check(CLI::IsMember({"jsonl", "csv"}));
  cmd->add_option("--root", o->root)->required();
  cmd->add_option("--out", o->out)->required();
  cmd->add_option("--top-terms", o->top_terms, "size of the popular-terms appendix");
  cmd->add_option("--popular-restrict", o->restrict,
                  "comma-separated terms restricting the popular-terms corpus");
  cmd->add_option("--term-source", o->term_source)
      ->check(CLI::IsMember({"keywords", "full"}));
  cmd->callback([&g, o] {
    Manifest mf;
    mf.command = "review-export";
    fs::path tp = resolve_path(g, o->taxonomy);
    mf.input(tp);
    auto tax = revmap::deserialize(tp);
    auto corpus = load_corpus(g, o->corpus, o->format, mf);
    auto source = o->term_source == "full"
                      ? revmap::TermSource::keywords_title_abstract
                      : revmap::TermSource::keywords_only;
    auto index = revmap::build_index(corpus, source, g.workers);
    std::vector<revmap::Term> restrict_terms;
    for (const auto& t : split_list(o->restrict))
      restrict_terms.push_back(revmap::normalize_term(t));
    fs::path outp = resolve_path(g, o->out);
    auto sheet =
        revmap::export_sheet(tax, index, o->root, outp, o->top_terms, restrict_terms);
    mf.config = {{"root", o->root},
                 {"top_terms", o->top_terms},
                 {"popular_restrict", o->restrict},
                 {"term_source", o->term_source},
                 {"workers", g.workers}};
    mf.outputs = {outp.filename().string()};
    mf.write(outp);
    std::cerr << "sheet: " << sheet.rows.size() << " rows\n";
  });
}

void setup_review_apply(CLI::App& app, GlobalOpts& g) {
  auto* cmd = app.add_subcommand(
      "review-apply", "Merge annotated sheets by majority vote and apply them");
  struct Opts {
    std::string taxonomy, original, out;
    std::vector<std::string> annotated;
    int quorum = 0;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--taxonomy", o->taxonomy)->required();
  cmd->add_option("--original-sheet", o->original)->required();
  cmd->add_option("--annotated", o->annotated, "annotated sheet (repeatable)")
      ->required()
      ->expected(-1);
  cmd->add_option("--quorum", o->quorum, "votes needed (default floor(n/2)+1)");
  cmd->add_option("--out", o->out, "revised taxonomy triple file")->required();
  cmd->callback([&g, o] {
    Manifest mf;
    mf.command = "review-apply";
    fs::path tp = resolve_path(g, o->taxonomy);
    mf.input(tp);
    auto tax = revmap::deserialize(tp);
    fs::path op = resolve_path(g, o->original);
    mf.input(op);
    auto original = revmap::read_sheet(op);
    std::vector<revmap::FeedbackOps> all;
    for (const auto& a : o->annotated) {
      fs::path ap = resolve_path(g, a);
      mf.input(ap);
      all.push_back(revmap::import_feedback(ap, original));
      std::cerr << "expert " << all.back().expert_id << ": "
                << all.back().ops.size() << " ops\n";
    }
    auto merged = revmap::merge_feedback(all, o->quorum);
    for (const auto& w : merged.warnings) std::cerr << "warning: " << w << "\n";
    auto applied = revmap::apply_feedback(tax, merged.merged);
    fs::path outp = resolve_path(g, o->out);
    revmap::serialize(applied.taxonomy, outp);
    mf.config = {{"quorum", o->quorum}, {"experts", o->annotated.size()}};
    mf.outputs = {outp.filename().string()};
    mf.write(outp);
    std::cerr << "applied " << merged.merged.ops.size() << " ops, emitted "
              << applied.constraints.size() << " constraints\n";
  });
}

void setup_select(CLI::App& app, GlobalOpts& g) {
  auto* cmd = app.add_subcommand("select", "Select primary studies by query");
  struct Opts {
    std::string corpus, format = "jsonl", taxonomy, query, query_file, name, out;
    bool word_boundary = false;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--corpus", o->corpus)->required();
  cmd->add_option("--format", o->format)->check(CLI::IsMember({"jsonl", "csv"}));
  cmd->add_option("--taxonomy", o->taxonomy)->required();
  cmd->add_option("--query", o->query, "inclusion-criteria search string");
  cmd->add_option("--query-file", o->query_file, "file holding the search string");
  cmd->add_option("--name", o->name, "study set name")->required();
  cmd->add_option("--out", o->out)->required();
  cmd->add_flag("--word-boundary", o->word_boundary,
                "match phrases only at word boundaries");
  cmd->callback([&g, o] {
    Manifest mf;
    mf.command = "select";
    if (o->query.empty() == o->query_file.empty())
      throw CLI::ValidationError("select",
                                 "exactly one of --query / --query-file required");
    std::string query_text = o->query;
    if (!o->query_file.empty()) {
      fs::path qp = resolve_path(g, o->query_file);
      mf.input(qp);
      query_text = revmap::read_file(qp);
    }
    fs::path tp = resolve_path(g, o->taxonomy);
    mf.input(tp);
    auto tax = revmap::deserialize(tp);
    auto corpus = load_corpus(g, o->corpus, o->format, mf);
    auto query = revmap::parse_query(query_text);
    revmap::SelectionOptions opts;
    opts.word_boundary = o->word_boundary;
    auto studies =
        revmap::select_studies(corpus, tax, query, o->name, opts, g.workers);
    fs::path outp = resolve_path(g, o->out);
    revmap::save_study_set(studies, outp);
    mf.config = {{"name", o->name},
                 {"query", query_text},
                 {"word_boundary", o->word_boundary},
                 {"workers", g.workers}};
    mf.outputs = {outp.filename().string()};
    mf.write(outp);
    std::cerr << "selected " << studies.ids.size() << " of " << corpus.size()
              << " papers\n";
  });
}

void setup_classify(CLI::App& app, GlobalOpts& g) {
  auto* cmd = app.add_subcommand("classify", "Classify a study set against the taxonomy");
  struct Opts {
    std::string corpus, format = "jsonl", taxonomy, studies, method, out;
    std::string idf_model, lda_model;
    revmap::ClassifierConfig cfg;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--corpus", o->corpus)->required();
  cmd->add_option("--format", o->format)->check(CLI::IsMember({"jsonl", "csv"}));
  cmd->add_option("--taxonomy", o->taxonomy)->required();
  cmd->add_option("--studies", o->studies)->required();
  cmd->add_option("--method", o->method, "dm | sim | tfidf | lda")
      ->required()
      ->check(CLI::IsMember({"dm", "sim", "tfidf", "lda"}));
  cmd->add_option("--out", o->out)->required();
  cmd->add_option("--idf-model", o->idf_model);
  cmd->add_option("--lda-model", o->lda_model);
  cmd->add_option("--sim-threshold", o->cfg.sim_threshold_t);
  cmd->add_option("--tfidf-top-n", o->cfg.tfidf_top_n);
  cmd->add_option("--tfidf-map-sim", o->cfg.tfidf_map_sim);
  cmd->add_option("--lda-topic-prob", o->cfg.lda_topic_prob_j);
  cmd->add_option("--lda-term-prob", o->cfg.lda_term_prob_k);
  cmd->add_option("--lda-map-sim", o->cfg.lda_map_sim);
  cmd->callback([&g, o] {
    Manifest mf;
    mf.command = "classify";
    fs::path tp = resolve_path(g, o->taxonomy);
    mf.input(tp);
    auto tax = revmap::deserialize(tp);
    auto corpus = load_corpus(g, o->corpus, o->format, mf);
    fs::path sp = resolve_path(g, o->studies);
    mf.input(sp);
    auto studies = revmap::load_study_set(sp);
    auto method = revmap::classifier_from_name(o->method);
    revmap::IdfModel idf;
    revmap::LdaModel lda;
    revmap::ClassifyModels models;
    if (method == revmap::ClassifierMethod::tfidf) {
      if (o->idf_model.empty())
        throw CLI::ValidationError("classify", "--idf-model required for tfidf");
      fs::path ip = resolve_path(g, o->idf_model);
      mf.input(ip);
      idf = revmap::load_idf_model(ip);
      models.idf = &idf;
    }
    if (method == revmap::ClassifierMethod::lda) {
      if (o->lda_model.empty())
        throw CLI::ValidationError("classify", "--lda-model required for lda");
      fs::path lp = resolve_path(g, o->lda_model);
      mf.input(lp);
      lda = revmap::load_lda_model(lp);
      models.lda = &lda;
    }
    auto result =
        revmap::classify_set(studies, corpus, method, tax, o->cfg, models, g.workers);
    fs::path outp = resolve_path(g, o->out);
    revmap::save_classification(result, outp);
    mf.config = result.config;
    mf.config["method"] = o->method;
    mf.config["workers"] = g.workers;
    mf.outputs = {outp.filename().string()};
    mf.write(outp);
    std::cerr << "classified " << result.assignments.size() << " papers\n";
  });
}

void setup_trends(CLI::App& app, GlobalOpts& g) {
  auto* cmd = app.add_subcommand("trends", "Per-topic trend analytics");
  struct Opts {
    std::string classification, corpus, format = "jsonl", out;
    std::string kind = "counts", table_format = "csv", topics;
    int year_lo = 0, year_hi = 0, top = 10;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--classification", o->classification)->required();
  cmd->add_option("--corpus", o->corpus)->required();
  cmd->add_option("--format", o->format)->check(CLI::IsMember({"jsonl", "csv"}));
  cmd->add_option("--kind", o->kind)->check(CLI::IsMember({"counts", "shares", "citations"}));
  cmd->add_option("--table-format", o->table_format)->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--year-lo", o->year_lo);
  cmd->add_option("--year-hi", o->year_hi);
  cmd->add_option("--topics", o->topics, "comma-separated topic subset");
  cmd->add_option("--top", o->top, "top-N topics when --topics is absent");
  cmd->add_option("--out", o->out)->required();
  cmd->callback([&g, o] {
    Manifest mf;
    mf.command = "trends";
    fs::path cp = resolve_path(g, o->classification);
    mf.input(cp);
    auto result = revmap::load_classification(cp);
    auto corpus = load_corpus(g, o->corpus, o->format, mf);
    int lo = o->year_lo, hi = o->year_hi;
    if (lo == 0 || hi == 0) {
      bool any = false;
      for (const auto& [id, topics] : result.assignments) {
        const revmap::Paper* p = corpus.find(id);
        if (!p) continue;
        if (!any) { lo = hi = p->year; any = true; }
        lo = std::min(lo, p->year);
        hi = std::max(hi, p->year);
      }
      if (!any) throw std::runtime_error("trends: empty classification");
    }
    auto fmt = revmap::table_format_from_name(o->table_format);
    fs::path outp = resolve_path(g, o->out);
    if (o->kind == "citations") {
      auto stats = revmap::topic_citation_stats(result, corpus);
      revmap::export_citation_stats(stats, outp, fmt);
    } else {
      auto table = revmap::topic_year_counts(result, corpus, lo, hi);
      if (o->kind == "counts") {
        revmap::export_trends(table, outp, fmt);
      } else {
        std::vector<std::string> subset = split_list(o->topics);
        if (subset.empty())
          subset = revmap::top_topics(result, static_cast<std::size_t>(o->top));
        auto shares = revmap::topic_share(table, subset);
        revmap::export_shares(shares, outp, fmt);
      }
    }
    mf.config = {{"kind", o->kind},       {"table_format", o->table_format},
                 {"year_lo", lo},         {"year_hi", hi},
                 {"topics", o->topics},   {"top", o->top},
                 {"workers", g.workers}};
    mf.outputs = {outp.filename().string()};
    mf.write(outp);
  });
}

void setup_evaluate(CLI::App& app, GlobalOpts& g) {
  auto* cmd = app.add_subcommand("evaluate", "Agreement and classifier statistics");
  struct Opts {
    std::string gold, pred, pred2, out;
    std::vector<std::string> annotations;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--gold", o->gold, "gold standard json");
  cmd->add_option("--pred", o->pred, "classification result json");
  cmd->add_option("--pred2", o->pred2, "second classification for McNemar");
  cmd->add_option("--annotations", o->annotations, "annotation csv (repeatable)")
      ->expected(-1);
  cmd->add_option("--out", o->out)->required();
  cmd->callback([&g, o] {
    Manifest mf;
    mf.command = "evaluate";
    json report = json::object();

    if (!o->gold.empty()) {
      fs::path gp = resolve_path(g, o->gold);
      mf.input(gp);
      auto gold = revmap::load_gold_standard(gp);
      auto eval_pred = [&](const std::string& path, const char* key) {
        fs::path pp = resolve_path(g, path);
        mf.input(pp);
        auto result = revmap::load_classification(pp);
        std::map<std::string, std::set<std::string>> pred;
        for (const auto& [item, gl] : gold.labels) {
          auto it = result.assignments.find(item);
          if (it == result.assignments.end())
            throw std::runtime_error("evaluate: prediction missing item " + item);
          pred[item] = it->second;
        }
        auto r = revmap::prf(pred, gold);
        json jr;
        jr["classifier"] = result.classifier;
        if (r.precision) jr["precision"] = *r.precision;
        if (r.recall) jr["recall"] = *r.recall;
        if (r.f_measure) jr["f_measure"] = *r.f_measure;
        report[key] = jr;
        return pred;
      };
      if (o->pred.empty())
        throw CLI::ValidationError("evaluate", "--gold requires --pred");
      auto pred_a = eval_pred(o->pred, "prf");
      if (!o->pred2.empty()) {
        auto pred_b = eval_pred(o->pred2, "prf2");
        std::map<std::string, bool> a_ok, b_ok;
        for (const auto& [item, gl] : gold.labels) {
          a_ok[item] = pred_a.at(item) == gl;
          b_ok[item] = pred_b.at(item) == gl;
        }
        auto m = revmap::mcnemar(a_ok, b_ok);
        report["mcnemar"] = {{"statistic", m.statistic},
                             {"p_value", m.p_value},
                             {"b", m.b},
                             {"c", m.c}};
      }
    }

    if (!o->annotations.empty()) {
      std::vector<revmap::AnnotationSet> sets;
      for (const auto& a : o->annotations) {
        fs::path ap = resolve_path(g, a);
        mf.input(ap);
        sets.push_back(revmap::load_annotations_csv(ap));
      }
      if (sets.size() >= 2) {
        json agreement = json::object();
        json kappa = json::object();
        for (std::size_t i = 0; i < sets.size(); ++i) {
          for (std::size_t j = i + 1; j < sets.size(); ++j) {
            std::string key = sets[i].annotator_id + "/" + sets[j].annotator_id;
            agreement[key] = revmap::pairwise_agreement(sets[i], sets[j]);
            kappa[key] = revmap::cohen_kappa(sets[i], sets[j]);
          }
        }
        report["pairwise_agreement"] = agreement;
        report["cohen_kappa"] = kappa;

        auto chi = revmap::chi_square_homogeneity(sets);
        report["chi_square"] = {{"statistic", chi.statistic},
                                {"p_value", chi.p_value},
                                {"df", chi.df}};

        // items x categories counts for Fleiss (equal raters per item)
        std::set<std::string> cats;
        for (const auto& s : sets)
          for (const auto& [item, l] : s.labels) cats.insert(l);
        std::vector<std::string> cat_list(cats.begin(), cats.end());
        std::vector<std::vector<long long>> matrix;
        for (const auto& [item, l0] : sets.front().labels) {
          std::vector<long long> row(cat_list.size(), 0);
          for (const auto& s : sets) {
            auto it = std::lower_bound(cat_list.begin(), cat_list.end(),
                                       s.labels.at(item));
            row[static_cast<std::size_t>(it - cat_list.begin())] += 1;
          }
          matrix.push_back(std::move(row));
        }
        report["fleiss_kappa"] = revmap::fleiss_kappa(matrix);

        json histograms = json::object();
        for (const auto& [who, hist] : revmap::agree_with_n(sets))
          histograms[who] = hist;
        report["agree_with_n"] = histograms;

        auto maj = revmap::majority_label(sets);
        json mj;
        mj["labels"] = maj.labels.labels;
        mj["ties"] = maj.tied_items;
        report["majority"] = mj;
      }
    }

    if (report.empty())
      throw CLI::ValidationError("evaluate",
                                 "nothing to evaluate: pass --gold/--pred or --annotations");
    fs::path outp = resolve_path(g, o->out);
    revmap::write_file(outp, report.dump(2) + "\n");
    mf.config = {{"workers", g.workers}};
    mf.outputs = {outp.filename().string()};
    mf.write(outp);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"revmap: ontology-driven systematic review automation"};
  app.set_version_flag("--version", revmap::kVersion);
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--workers", g.workers, "worker thread count")
      ->envname("REVMAP_WORKERS");
  auto* config_opt = app.set_config(
      "--config", "", "configuration file (INI: key=value, [subcommand] sections)");
  // capture the config location before subcommand callbacks resolve paths
  app.parse_complete_callback([&] {
    if (config_opt->count() > 0) g.config_path = config_opt->as<std::string>();
  });

  setup_ingest(app, g);
  setup_learn(app, g);
  setup_review_export(app, g);
  setup_review_apply(app, g);
  setup_select(app, g);
  setup_classify(app, g);
  setup_trends(app, g);
  setup_evaluate(app, g);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    std::cerr << err.dump() << "\n";
    return 2;
  }
  return 0;
}
