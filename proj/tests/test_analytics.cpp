#include <catch2/catch_amalgamated.hpp>

#include "revmap/analytics.hpp"
#include "support/helpers.hpp"

using namespace revmap;
using testsupport::corpus_of;
using testsupport::paper;

namespace {

// six papers across two topics and three years, tallied by hand:
//            2010  2011  2012
//   tides       2     1     0
//   waves       1     2     1
// (h4 carries both labels)
Corpus six_corpus() {
  auto p = [](std::string id, int year, long long cites) {
    return testsupport::paper(std::move(id), {}, year, "t", "a", cites);
  };
  return corpus_of({p("h1", 2010, 2), p("h2", 2010, 4), p("h3", 2011, 6),
                    p("h4", 2010, 1), p("h5", 2011, 3), p("h6", 2012, 5)});
}

ClassificationResult six_result() {
  ClassificationResult r;
  r.classifier = "dm";
  r.taxonomy_version = "fixture";
  r.assignments["h1"] = {"tides"};
  r.assignments["h2"] = {"tides"};
  r.assignments["h3"] = {"tides"};
  r.assignments["h4"] = {"waves", "tides"};
  r.assignments["h5"] = {"waves"};
  r.assignments["h6"] = {"waves"};
  return r;
}

}  // namespace

TEST_CASE("empty result yields an all-zero table") {
  ClassificationResult r;
  auto t = topic_year_counts(r, six_corpus(), 2010, 2012, {"tides"});
  for (int y = 2010; y <= 2012; ++y) CHECK(t.cell(0, y) == 0);
}

TEST_CASE("hand-tallied six paper fixture") {
  auto t = topic_year_counts(six_result(), six_corpus(), 2010, 2012);
  REQUIRE(t.topics == std::vector<std::string>{"tides", "waves"});
  CHECK(t.cell(0, 2010) == 3);  // h1 h2 h4
  CHECK(t.cell(0, 2011) == 1);  // h3
  CHECK(t.cell(0, 2012) == 0);
  CHECK(t.cell(1, 2010) == 1);  // h4
  CHECK(t.cell(1, 2011) == 1);  // h5
  CHECK(t.cell(1, 2012) == 1);  // h6
}

TEST_CASE("row sums equal per-topic assignment counts within range") {
  auto r = six_result();
  auto t = topic_year_counts(r, six_corpus(), 2010, 2012);
  for (std::size_t i = 0; i < t.topics.size(); ++i) {
    long long row = 0;
    for (int y = t.year_lo; y <= t.year_hi; ++y) row += t.cell(i, y);
    long long expected = 0;
    for (const auto& [id, topics] : r.assignments)
      if (topics.count(t.topics[i])) ++expected;
    CHECK(row == expected);
  }
}

TEST_CASE("counts are additive over disjoint study-set unions") {
  auto r = six_result();
  ClassificationResult first, second;
  first.assignments = {{"h1", r.assignments["h1"]},
                       {"h2", r.assignments["h2"]},
                       {"h4", r.assignments["h4"]}};
  second.assignments = {{"h3", r.assignments["h3"]},
                        {"h5", r.assignments["h5"]},
                        {"h6", r.assignments["h6"]}};
  auto corpus = six_corpus();
  auto whole = topic_year_counts(r, corpus, 2010, 2012, {"tides", "waves"});
  auto a = topic_year_counts(first, corpus, 2010, 2012, {"tides", "waves"});
  auto b = topic_year_counts(second, corpus, 2010, 2012, {"tides", "waves"});
  for (std::size_t i = 0; i < whole.topics.size(); ++i)
    for (int y = 2010; y <= 2012; ++y)
      CHECK(whole.cell(i, y) == a.cell(i, y) + b.cell(i, y));
}

TEST_CASE("citation stats: single paper and closed-form case") {
  ClassificationResult r;
  r.assignments["h1"] = {"solo"};
  Corpus c = corpus_of({paper("h1", {}, 2010, "", "", 10)});
  auto stats = topic_citation_stats(r, c);
  REQUIRE(stats.count("solo") == 1);
  CHECK(stats.at("solo").mean == 10.0);
  CHECK(stats.at("solo").stddev == 0.0);
  CHECK(stats.at("solo").n == 1);
}

TEST_CASE("citation stats over {2,4,6}") {
  ClassificationResult r;
  r.assignments["h1"] = {"trio"};
  r.assignments["h2"] = {"trio"};
  r.assignments["h3"] = {"trio"};
  Corpus c = corpus_of({paper("h1", {}, 2010, "", "", 2),
                        paper("h2", {}, 2010, "", "", 4),
                        paper("h3", {}, 2010, "", "", 6)});
  auto stats = topic_citation_stats(r, c);
  CHECK(stats.at("trio").mean == Catch::Approx(4.0));
  CHECK(stats.at("trio").stddev == Catch::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("topics with no assigned papers are absent from citation stats") {
  ClassificationResult r;
  r.assignments["h1"] = {};
  Corpus c = corpus_of({paper("h1", {}, 2010, "", "", 3)});
  CHECK(topic_citation_stats(r, c).empty());
}

TEST_CASE("single topic share is 100 percent in non-empty years") {
  auto t = topic_year_counts(six_result(), six_corpus(), 2010, 2012);
  auto s = topic_share(t, {"waves"});
  for (int y = 2010; y <= 2012; ++y) {
    auto cell = s.cells[0][static_cast<std::size_t>(y - s.year_lo)];
    REQUIRE(cell.has_value());
    CHECK(*cell == 100.0);
  }
}

TEST_CASE("shares split 75/25 and handle empty years") {
  auto t = topic_year_counts(six_result(), six_corpus(), 2010, 2013);
  auto s = topic_share(t, {"tides", "waves"});
  auto at = [&](std::size_t topic, int year) {
    return s.cells[topic][static_cast<std::size_t>(year - s.year_lo)];
  };
  CHECK(*at(0, 2010) == Catch::Approx(75.0));
  CHECK(*at(1, 2010) == Catch::Approx(25.0));
  CHECK(*at(0, 2012) == Catch::Approx(0.0));
  CHECK(*at(1, 2012) == Catch::Approx(100.0));
  CHECK_FALSE(at(0, 2013).has_value());  // all-zero year
  CHECK_FALSE(at(1, 2013).has_value());
}

TEST_CASE("shares of any non-empty year sum to 100") {
  auto t = topic_year_counts(six_result(), six_corpus(), 2010, 2012);
  auto s = topic_share(t, {"tides", "waves"});
  for (int y = 2010; y <= 2012; ++y) {
    double total = 0.0;
    bool defined = true;
    for (std::size_t i = 0; i < s.topics.size(); ++i) {
      auto c = s.cells[i][static_cast<std::size_t>(y - s.year_lo)];
      if (!c) { defined = false; break; }
      total += *c;
    }
    if (defined) CHECK(total == Catch::Approx(100.0).margin(1e-9));
  }
}

TEST_CASE("topic_share rejects unknown or empty subsets") {
  auto t = topic_year_counts(six_result(), six_corpus(), 2010, 2012);
  CHECK_THROWS_AS(topic_share(t, {}), std::invalid_argument);
  CHECK_THROWS_AS(topic_share(t, {"ghost"}), std::invalid_argument);
}

TEST_CASE("top_topics ranks by total with lexicographic ties") {
  auto r = six_result();
  auto top = top_topics(r, 10);
  CHECK(top == std::vector<std::string>{"tides", "waves"});  // 4 vs 3
  CHECK(top_topics(r, 1) == std::vector<std::string>{"tides"});
}

TEST_CASE("export csv shape, determinism, and reimport") {
  testsupport::TempDir dir("trends");
  auto t = topic_year_counts(six_result(), six_corpus(), 2010, 2012);
  export_trends(t, dir.file("t.csv"), TableFormat::csv);
  export_trends(t, dir.file("t2.csv"), TableFormat::csv);
  auto body = read_file(dir.file("t.csv"));
  CHECK(body == read_file(dir.file("t2.csv")));
  CHECK(body.substr(0, 26) == "topic,2010,2011,2012\ntides");

  // reimport through the generic csv reader reproduces the cells
  std::istringstream in(body);
  std::string line;
  std::getline(in, line);  // header
  std::size_t row = 0;
  while (std::getline(in, line)) {
    auto fields = csv_parse_line(line);
    REQUIRE(fields.size() == 4);
    CHECK(fields[0] == t.topics[row]);
    for (int y = 2010; y <= 2012; ++y)
      CHECK(std::stoll(fields[static_cast<std::size_t>(y - 2009)]) == t.cell(row, y));
    ++row;
  }
  CHECK(row == t.topics.size());
}

TEST_CASE("empty table exports a header-only csv") {
  testsupport::TempDir dir("trends");
  ClassificationResult r;
  auto t = topic_year_counts(r, six_corpus(), 2010, 2011);
  export_trends(t, dir.file("empty.csv"), TableFormat::csv);
  CHECK(read_file(dir.file("empty.csv")) == "topic,2010,2011\n");
}

TEST_CASE("share export writes NA for undefined cells") {
  testsupport::TempDir dir("trends");
  auto t = topic_year_counts(six_result(), six_corpus(), 2010, 2013);
  auto s = topic_share(t, {"tides", "waves"});
  export_shares(s, dir.file("s.csv"), TableFormat::csv);
  auto body = read_file(dir.file("s.csv"));
  CHECK(body.find(",NA") != std::string::npos);
  export_shares(s, dir.file("s.json"), TableFormat::json);
  auto j = nlohmann::json::parse(read_file(dir.file("s.json")));
  CHECK(j.at("cells")[0][3].is_null());
}

TEST_CASE("citation stats export both formats") {
  testsupport::TempDir dir("trends");
  auto stats = topic_citation_stats(six_result(), six_corpus());
  export_citation_stats(stats, dir.file("c.csv"), TableFormat::csv);
  auto body = read_file(dir.file("c.csv"));
  CHECK(body.rfind("topic,mean,stddev,n\n", 0) == 0);
  export_citation_stats(stats, dir.file("c.json"), TableFormat::json);
  auto j = nlohmann::json::parse(read_file(dir.file("c.json")));
  CHECK(j.at("tides").at("n").get<long long>() == 4);
}

TEST_CASE("export to an unwritable path fails") {
  auto t = topic_year_counts(six_result(), six_corpus(), 2010, 2012);
  CHECK_THROWS(export_trends(t, "/nonexistent-dir/t.csv", TableFormat::csv));
}
