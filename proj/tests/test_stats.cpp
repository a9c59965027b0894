#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "revmap/stats.hpp"
#include "support/helpers.hpp"

using namespace revmap;
using testsupport::TempDir;

namespace {

AnnotationSet annot(std::string id, std::vector<std::pair<std::string, std::string>> kv) {
  AnnotationSet a;
  a.annotator_id = std::move(id);
  for (auto& [k, v] : kv) a.labels[k] = v;
  return a;
}

}  // namespace

TEST_CASE("regularized gamma against published chi-square tables") {
  // df=1, stat=3.841 -> p=0.05 and friends
  CHECK(chi_square_sf(3.841, 1) == Catch::Approx(0.05).margin(1e-3));
  CHECK(chi_square_sf(5.991, 2) == Catch::Approx(0.05).margin(1e-3));
  CHECK(chi_square_sf(6.635, 1) == Catch::Approx(0.01).margin(1e-3));
  CHECK(chi_square_sf(11.345, 3) == Catch::Approx(0.01).margin(1e-3));
  CHECK(chi_square_sf(18.307, 10) == Catch::Approx(0.05).margin(1e-3));
  CHECK(chi_square_sf(31.410, 20) == Catch::Approx(0.05).margin(1e-3));
  // reference values to 1e-6 (independent implementation)
  CHECK(chi_square_sf(20.0, 1) == Catch::Approx(7.744216431044088e-06).margin(1e-9));
  CHECK(chi_square_sf(8.1, 1) == Catch::Approx(0.004426525857919834).margin(1e-6));
  CHECK(chi_square_sf(0.1, 1) == Catch::Approx(0.7518296340458492).margin(1e-6));
  CHECK(regularized_gamma_p(2.5, 1.2) ==
        Catch::Approx(0.20852587940567532).margin(1e-9));
  CHECK(regularized_gamma_p(0.5, 0.0) == 0.0);
  CHECK(regularized_gamma_q(0.5, 0.0) == 1.0);
  CHECK_THROWS_AS(regularized_gamma_p(-1.0, 1.0), std::invalid_argument);
}

TEST_CASE("p is monotone decreasing in the statistic at fixed df") {
  double prev = 1.0;
  for (double s = 0.0; s <= 30.0; s += 0.5) {
    double p = chi_square_sf(s, 4);
    CHECK(p <= prev + 1e-15);
    prev = p;
  }
}

TEST_CASE("pairwise agreement basics") {
  auto a = annot("a", {{"i1", "x"}, {"i2", "y"}, {"i3", "z"}});
  auto b = annot("b", {{"i1", "x"}, {"i2", "y"}, {"i3", "z"}});
  CHECK(pairwise_agreement(a, b) == 1.0);
  auto c = annot("c", {{"i1", "q"}, {"i2", "q"}, {"i3", "q"}});
  CHECK(pairwise_agreement(a, c) == 0.0);
  CHECK(pairwise_agreement(a, a) == 1.0);
}

TEST_CASE("pairwise agreement 17 of 25") {
  AnnotationSet a, b;
  a.annotator_id = "a";
  b.annotator_id = "b";
  for (int i = 0; i < 25; ++i) {
    std::string item = "i" + std::to_string(i);
    a.labels[item] = "cat" + std::to_string(i % 5);
    b.labels[item] = i < 17 ? a.labels[item] : "other";
  }
  CHECK(pairwise_agreement(a, b) == Catch::Approx(0.68));
}

TEST_CASE("pairwise agreement rejects mismatched item sets") {
  auto a = annot("a", {{"i1", "x"}});
  auto b = annot("b", {{"i2", "x"}});
  CHECK_THROWS_AS(pairwise_agreement(a, b), std::invalid_argument);
}

TEST_CASE("cohen kappa on a 2x2 confusion fixture") {
  // both-A:20, a-A/b-B:5, a-B/b-A:10, both-B:15
  AnnotationSet a, b;
  a.annotator_id = "a";
  b.annotator_id = "b";
  int idx = 0;
  auto fill = [&](int count, const char* la, const char* lb) {
    for (int i = 0; i < count; ++i) {
      std::string item = "i" + std::to_string(idx++);
      a.labels[item] = la;
      b.labels[item] = lb;
    }
  };
  fill(20, "A", "A");
  fill(5, "A", "B");
  fill(10, "B", "A");
  fill(15, "B", "B");
  // po = 0.7, pe = 0.5*0.6 + 0.5*0.4 = 0.5, kappa = 0.4
  CHECK(cohen_kappa(a, b) == Catch::Approx(0.4).margin(1e-12));
  CHECK(cohen_kappa(b, a) == Catch::Approx(cohen_kappa(a, b)).margin(1e-15));
}

TEST_CASE("cohen kappa is 1 for identical annotations over 2+ labels") {
  auto a = annot("a", {{"i1", "x"}, {"i2", "y"}, {"i3", "x"}});
  CHECK(cohen_kappa(a, a) == 1.0);
}

TEST_CASE("cohen kappa degenerate single-label case") {
  auto a = annot("a", {{"i1", "x"}, {"i2", "x"}});
  auto b = annot("b", {{"i1", "x"}, {"i2", "x"}});
  CHECK(cohen_kappa(a, b) == 1.0);
}

TEST_CASE("cohen kappa of independent annotators is near zero in expectation") {
  std::mt19937 rng(2024);
  const int items = 200, trials = 50;
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    AnnotationSet a, b;
    a.annotator_id = "a";
    b.annotator_id = "b";
    for (int i = 0; i < items; ++i) {
      std::string item = "i" + std::to_string(i);
      a.labels[item] = "c" + std::to_string(rng() % 4);
      b.labels[item] = "c" + std::to_string(rng() % 4);
    }
    sum += cohen_kappa(a, b);
  }
  CHECK(std::fabs(sum / trials) < 0.05);
}

TEST_CASE("fleiss kappa is 1 when all raters are unanimous") {
  std::vector<std::vector<long long>> m{{14, 0}, {0, 14}, {14, 0}};
  CHECK(fleiss_kappa(m) == 1.0);
}

TEST_CASE("fleiss kappa on the classic 10-item 14-rater table") {
  std::vector<std::vector<long long>> m{
      {0, 0, 0, 0, 14}, {0, 2, 6, 4, 2}, {0, 0, 3, 5, 6}, {0, 3, 9, 2, 0},
      {2, 2, 8, 1, 1},  {7, 7, 0, 0, 0}, {3, 2, 6, 3, 0}, {2, 5, 3, 2, 2},
      {6, 5, 2, 1, 0},  {0, 2, 2, 3, 7}};
  // independent recomputation of P-bar and Pe-bar
  double n = 14.0, N = 10.0;
  double p_bar = 0.0;
  std::vector<double> col(5, 0.0);
  for (const auto& row : m) {
    double sq = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      sq += static_cast<double>(row[j] * row[j]);
      col[j] += static_cast<double>(row[j]);
    }
    p_bar += (sq - n) / (n * (n - 1.0));
  }
  p_bar /= N;
  double pe = 0.0;
  for (double c : col) pe += (c / (N * n)) * (c / (N * n));
  double expected = (p_bar - pe) / (1.0 - pe);
  CHECK(fleiss_kappa(m) == Catch::Approx(expected).margin(1e-12));
  CHECK(fleiss_kappa(m) == Catch::Approx(0.20993070442195522).margin(1e-9));
}

TEST_CASE("fleiss kappa rejects unequal rater counts") {
  std::vector<std::vector<long long>> m{{3, 2}, {4, 2}};
  CHECK_THROWS_AS(fleiss_kappa(m), std::invalid_argument);
}

TEST_CASE("fleiss kappa of uniform random ratings is near zero") {
  std::mt19937 rng(7);
  const int trials = 40;
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::vector<std::vector<long long>> m(50, std::vector<long long>(4, 0));
    for (auto& row : m)
      for (int r = 0; r < 10; ++r) row[rng() % 4] += 1;
    sum += fleiss_kappa(m);
  }
  CHECK(std::fabs(sum / trials) < 0.05);
}

TEST_CASE("chi square of identical distributions is zero") {
  auto a = annot("a", {{"i1", "x"}, {"i2", "y"}});
  auto b = annot("b", {{"i1", "x"}, {"i2", "y"}});
  auto r = chi_square_homogeneity({a, b});
  CHECK(r.statistic == Catch::Approx(0.0).margin(1e-12));
  CHECK(r.p_value == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("chi square on the 10/0 0/10 table") {
  AnnotationSet a, b;
  a.annotator_id = "a";
  b.annotator_id = "b";
  for (int i = 0; i < 10; ++i) {
    a.labels["a" + std::to_string(i)] = "X";
    b.labels["b" + std::to_string(i)] = "Y";
  }
  auto r = chi_square_homogeneity({a, b});
  CHECK(r.statistic == Catch::Approx(20.0).margin(1e-9));
  CHECK(r.df == 1);
  CHECK(r.p_value == Catch::Approx(7.744216431044088e-06).margin(1e-9));
}

TEST_CASE("chi square flags degenerate tables") {
  auto a = annot("a", {{"i1", "x"}});
  auto b = annot("b", {{"i1", "x"}});
  CHECK_THROWS_AS(chi_square_homogeneity({a, b}), std::invalid_argument);
  CHECK_THROWS_AS(chi_square_homogeneity({a}), std::invalid_argument);
}

TEST_CASE("between-group difference dwarfs within-group difference") {
  // two internally consistent camps with opposite preferences
  auto mk = [&](std::string id, int bias) {
    AnnotationSet s;
    s.annotator_id = std::move(id);
    for (int i = 0; i < 30; ++i) {
      bool major = (i % 10) < 8;
      s.labels["i" + std::to_string(i)] =
          (major == (bias == 0)) ? "alpha" : "beta";
    }
    return s;
  };
  auto g1a = mk("g1a", 0), g1b = mk("g1b", 0);
  auto g2a = mk("g2a", 1), g2b = mk("g2b", 1);
  double within1 = chi_square_homogeneity({g1a, g1b}).p_value;
  double within2 = chi_square_homogeneity({g2a, g2b}).p_value;
  double between = chi_square_homogeneity({g1a, g2a}).p_value;
  CHECK(between < within1);
  CHECK(between < within2);
  CHECK(between < 0.001);
  CHECK(within1 > 0.5);
}

TEST_CASE("mcnemar on identical correctness vectors") {
  std::map<std::string, bool> a{{"i1", true}, {"i2", false}};
  auto r = mcnemar(a, a);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == 1.0);
}

TEST_CASE("mcnemar b=10 c=0") {
  std::map<std::string, bool> a, b;
  for (int i = 0; i < 10; ++i) {
    a["i" + std::to_string(i)] = true;
    b["i" + std::to_string(i)] = false;
  }
  a["extra"] = b["extra"] = true;
  auto r = mcnemar(a, b);
  CHECK(r.statistic == Catch::Approx(8.1).margin(1e-12));
  CHECK(r.p_value == Catch::Approx(0.004426525857919834).margin(1e-6));
}

TEST_CASE("mcnemar b=c=5 gives statistic 0.1") {
  std::map<std::string, bool> a, b;
  for (int i = 0; i < 5; ++i) {
    a["x" + std::to_string(i)] = true;
    b["x" + std::to_string(i)] = false;
    a["y" + std::to_string(i)] = false;
    b["y" + std::to_string(i)] = true;
  }
  auto r = mcnemar(a, b);
  CHECK(r.statistic == Catch::Approx(0.1).margin(1e-12));
  CHECK(r.p_value == Catch::Approx(0.7518296340458492).margin(1e-6));
}

TEST_CASE("mcnemar rejects mismatched items") {
  std::map<std::string, bool> a{{"i1", true}};
  std::map<std::string, bool> b{{"i2", true}};
  CHECK_THROWS_AS(mcnemar(a, b), std::invalid_argument);
}

TEST_CASE("prf on identical predictions") {
  GoldStandard gold;
  gold.labels["i1"] = {"t1", "t2"};
  gold.labels["i2"] = {"t3"};
  auto r = prf(gold.labels, gold);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.f_measure == 1.0);
}

TEST_CASE("prf half recall fixture") {
  GoldStandard gold;
  std::map<std::string, std::set<std::string>> pred;
  for (int i = 0; i < 10; ++i) {
    std::string item = "i" + std::to_string(i);
    gold.labels[item] = {"a", "b"};
    pred[item] = {"a"};
  }
  auto r = prf(pred, gold);
  CHECK(*r.precision == Catch::Approx(1.0));
  CHECK(*r.recall == Catch::Approx(0.5));
  CHECK(*r.f_measure == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("prf empty prediction conventions") {
  GoldStandard gold;
  gold.labels["i1"] = {"a"};
  std::map<std::string, std::set<std::string>> pred{{"i1", {}}};
  auto r = prf(pred, gold);
  CHECK_FALSE(r.precision.has_value());
  CHECK(*r.recall == 0.0);
  CHECK_FALSE(r.f_measure.has_value());
}

TEST_CASE("prf f-measure is the harmonic mean recomputed independently") {
  std::mt19937 rng(11);
  for (int t = 0; t < 50; ++t) {
    GoldStandard gold;
    std::map<std::string, std::set<std::string>> pred;
    for (int i = 0; i < 20; ++i) {
      std::string item = "i" + std::to_string(i);
      std::set<std::string> g, p;
      for (int l = 0; l < 5; ++l) {
        if (rng() % 2) g.insert("t" + std::to_string(l));
        if (rng() % 2) p.insert("t" + std::to_string(l));
      }
      if (g.empty()) g.insert("t0");
      gold.labels[item] = g;
      pred[item] = p;
    }
    auto r = prf(pred, gold);
    if (r.precision && r.recall && (*r.precision + *r.recall) > 0) {
      double f = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
      CHECK(*r.f_measure == Catch::Approx(f).margin(1e-12));
    }
  }
}

TEST_CASE("agree_with_n for two identical annotators") {
  auto a = annot("a", {{"i1", "x"}, {"i2", "y"}});
  auto b = annot("b", {{"i1", "x"}, {"i2", "y"}});
  auto hist = agree_with_n({a, b});
  CHECK(hist.at("a") == std::vector<double>{0.0, 1.0});
  CHECK(hist.at("b") == std::vector<double>{0.0, 1.0});
}

TEST_CASE("agree_with_n isolates the odd one out") {
  auto a = annot("a", {{"i1", "x"}, {"i2", "y"}});
  auto b = annot("b", {{"i1", "x"}, {"i2", "y"}});
  auto c = annot("c", {{"i1", "q"}, {"i2", "r"}});
  auto hist = agree_with_n({a, b, c});
  CHECK(hist.at("c") == std::vector<double>{1.0, 0.0, 0.0});
  CHECK(hist.at("a") == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("agree_with_n matches brute-force counting for 7 annotators") {
  std::mt19937 rng(5);
  std::vector<AnnotationSet> all;
  for (int r = 0; r < 7; ++r) {
    AnnotationSet s;
    s.annotator_id = "r" + std::to_string(r);
    for (int i = 0; i < 25; ++i)
      s.labels["i" + std::to_string(i)] = "c" + std::to_string(rng() % 5);
    all.push_back(std::move(s));
  }
  auto hist = agree_with_n(all);
  for (int r = 0; r < 7; ++r) {
    std::vector<double> expected(7, 0.0);
    for (int i = 0; i < 25; ++i) {
      std::string item = "i" + std::to_string(i);
      int n = 0;
      for (int o = 0; o < 7; ++o) {
        if (o == r) continue;
        if (all[o].labels.at(item) == all[r].labels.at(item)) ++n;
      }
      expected[n] += 1.0 / 25.0;
    }
    auto got = hist.at("r" + std::to_string(r));
    for (int k = 0; k < 7; ++k)
      CHECK(got[k] == Catch::Approx(expected[k]).margin(1e-12));
  }
}

TEST_CASE("majority label with unanimity, majority, and ties") {
  auto a = annot("a", {{"i1", "x"}, {"i2", "x"}, {"i3", "x"}});
  auto b = annot("b", {{"i1", "x"}, {"i2", "x"}, {"i3", "y"}});
  auto c = annot("c", {{"i1", "x"}, {"i2", "y"}, {"i3", "z"}});
  auto r = majority_label({a, b, c});
  CHECK(r.labels.labels.at("i1") == "x");
  CHECK(r.labels.labels.at("i2") == "x");
  CHECK(r.labels.labels.at("i3") == "none");
  CHECK(r.tied_items == std::set<std::string>{"i3"});
}

TEST_CASE("annotation csv round trip") {
  TempDir dir("stats");
  auto a = annot("expert1", {{"i1", "x"}, {"i2", "none"}});
  save_annotations_csv(a, dir.file("a.csv"));
  auto back = load_annotations_csv(dir.file("a.csv"), "expert1");
  CHECK(back.labels == a.labels);
  CHECK(back.annotator_id == "expert1");
}

TEST_CASE("gold standard json loading") {
  TempDir dir("stats");
  write_file(dir.file("g.json"), R"({"i1": ["t1", "t2"], "i2": ["t3"]})");
  auto g = load_gold_standard(dir.file("g.json"));
  CHECK(g.labels.at("i1") == std::set<std::string>{"t1", "t2"});
  write_file(dir.file("bad.json"), R"({"i1": []})");
  CHECK_THROWS(load_gold_standard(dir.file("bad.json")));
}
