#include <catch2/catch_amalgamated.hpp>

#include "revmap/index.hpp"
#include "support/helpers.hpp"

using namespace revmap;
using testsupport::corpus_of;
using testsupport::paper;

TEST_CASE("two papers sharing both terms") {
  auto c = corpus_of({paper("p1", {"a1", "b1"}), paper("p2", {"a1", "b1"})});
  auto ix = build_index(c);
  CHECK(ix.cooccur("a1", "b1") == 2);
  CHECK(ix.cooccur("b1", "a1") == 2);
  CHECK(ix.cooccur("a1", "a1") == 2);
  CHECK(ix.df("a1") == 2);
}

TEST_CASE("terms never sharing a paper") {
  auto c = corpus_of({paper("p1", {"aa"}), paper("p2", {"bb"})});
  auto ix = build_index(c);
  CHECK(ix.cooccur("aa", "bb") == 0);
}

TEST_CASE("duplicate keyword counts once per paper") {
  auto c = corpus_of({paper("p1", {"Java", "java", "JAVA", "cc"})});
  auto ix = build_index(c);
  CHECK(ix.df("java") == 1);
  CHECK(ix.cooccur("java", "cc") == 1);
}

TEST_CASE("short terms are discarded") {
  auto c = corpus_of({paper("p1", {"x", "soa"})});
  auto ix = build_index(c);
  CHECK_FALSE(ix.contains("x"));
  CHECK(ix.contains("soa"));
}

TEST_CASE("empty corpus is rejected") {
  Corpus c;
  CHECK_THROWS(build_index(c));
}

TEST_CASE("debut year and per-year counts") {
  auto c = corpus_of({paper("p1", {"aa", "bb"}, 2007), paper("p2", {"aa"}, 2005),
                      paper("p3", {"aa", "bb"}, 2009)});
  auto ix = build_index(c);
  CHECK(ix.debut("aa") == 2005);
  CHECK(ix.debut("bb") == 2007);
  auto by_year = ix.cooccur_by_year("aa", "bb");
  REQUIRE(by_year.size() == 2);
  CHECK(by_year.at(2007) == 1);
  CHECK(by_year.at(2009) == 1);
}

TEST_CASE("context vector excludes self and counts co-occurrence") {
  auto c = corpus_of({paper("p1", {"aa", "bb"}), paper("p2", {"aa", "bb"}),
                      paper("p3", {"aa", "cc"}), paper("p4", {"dd"})});
  auto ix = build_index(c);
  auto v = context_vector(ix, "aa");
  REQUIRE(v.size() == 2);
  CHECK(v.at("bb") == 2);
  CHECK(v.at("cc") == 1);
  CHECK(context_vector(ix, "dd").empty());
  CHECK_THROWS_AS(context_vector(ix, "zz"), std::out_of_range);
}

TEST_CASE("title and abstract ngrams enter the full index") {
  auto c = corpus_of({paper("p1", {}, 2010, "Service Oriented Computing",
                            "We study microservices."),
                      paper("p2", {}, 2011, "Other", "Nothing here.")});
  auto ix = build_index(c, TermSource::keywords_title_abstract);
  CHECK(ix.contains("service oriented"));
  CHECK(ix.contains("service oriented computing"));
  CHECK(ix.contains("microservices"));
  CHECK(ix.cooccur("service oriented", "microservices") == 1);
  auto keywords_only = build_index(c, TermSource::keywords_only);
  CHECK_FALSE(keywords_only.contains("microservices"));
}

TEST_CASE("bundled fixture matches a brute-force pairwise recount") {
  auto corpus = ingest_corpus(testsupport::data_dir() / "corpus_small.jsonl",
                              CorpusFormat::jsonl);
  REQUIRE(corpus.size() == 50);
  REQUIRE(corpus.warnings.empty());
  auto ix = build_index(corpus);
  auto terms = ix.terms();
  REQUIRE(!terms.empty());
  for (const auto& x : terms) {
    for (const auto& y : terms) {
      long long expected = testsupport::brute_cooccur(
          corpus, TermSource::keywords_only, x, y);
      INFO(x << " / " << y);
      CHECK(ix.cooccur(x, y) == expected);
    }
  }
}

TEST_CASE("co-occurrence symmetry and bound properties") {
  auto corpus = ingest_corpus(testsupport::data_dir() / "corpus_small.jsonl",
                              CorpusFormat::jsonl);
  auto ix = build_index(corpus);
  auto terms = ix.terms();
  for (const auto& x : terms) {
    for (const auto& y : terms) {
      long long xy = ix.cooccur(x, y);
      CHECK(xy == ix.cooccur(y, x));
      CHECK(xy <= std::min(ix.df(x), ix.df(y)));
    }
  }
}

TEST_CASE("yearly breakdown sums to the total") {
  auto corpus = ingest_corpus(testsupport::data_dir() / "corpus_small.jsonl",
                              CorpusFormat::jsonl);
  auto ix = build_index(corpus);
  auto terms = ix.terms();
  for (const auto& x : terms) {
    for (const auto& y : terms) {
      if (x >= y) continue;
      long long sum = 0;
      for (const auto& [year, c] : ix.cooccur_by_year(x, y)) sum += c;
      CHECK(sum == ix.cooccur(x, y));
    }
  }
}

TEST_CASE("rebuild determinism and worker independence") {
  auto corpus = ingest_corpus(testsupport::data_dir() / "corpus_small.jsonl",
                              CorpusFormat::jsonl);
  auto a = build_index(corpus, TermSource::keywords_only, 1);
  auto b = build_index(corpus, TermSource::keywords_only, 8);
  auto ta = a.terms();
  auto tb = b.terms();
  REQUIRE(ta == tb);
  for (const auto& x : ta) {
    CHECK(a.df(x) == b.df(x));
    CHECK(a.debut(x) == b.debut(x));
    CHECK(a.context_vector(x) == b.context_vector(x));
    CHECK(a.postings(x) == b.postings(x));
  }
}

TEST_CASE("collapse merges postings of aliased terms") {
  auto c = corpus_of({paper("p1", {"product line"}), paper("p2", {"product lines"}),
                      paper("p3", {"product line", "product lines"}),
                      paper("p4", {"feature models", "product line"})});
  auto ix = build_index(c);
  auto merged = ix.collapse({{"product lines", "product line"}});
  CHECK(merged.df("product line") == 4);
  CHECK_FALSE(merged.contains("product lines"));
  CHECK(merged.cooccur("product line", "feature models") == 1);
  CHECK(merged.doc_count() == 4);
}
