#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "revmap/util.hpp"

namespace revmap {

// ---- regularized incomplete gamma ------------------------------------------
// Series + continued-fraction evaluation; feeds the chi-square p-values.

namespace detail {

inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

// P(a, x): lower regularized incomplete gamma.
inline double regularized_gamma_p(double a, double x) {
  if (a <= 0.0) throw std::invalid_argument("regularized_gamma_p: a must be > 0");
  if (x < 0.0) throw std::invalid_argument("regularized_gamma_p: x must be >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

// Q(a, x) = 1 - P(a, x).
inline double regularized_gamma_q(double a, double x) {
  if (a <= 0.0) throw std::invalid_argument("regularized_gamma_q: a must be > 0");
  if (x < 0.0) throw std::invalid_argument("regularized_gamma_q: x must be >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

// Survival function of the chi-square distribution with df degrees of freedom.
inline double chi_square_sf(double statistic, int df) {
  if (df <= 0) throw std::invalid_argument("chi_square_sf: df must be positive");
  if (statistic < 0) throw std::invalid_argument("chi_square_sf: negative statistic");
  return regularized_gamma_q(df / 2.0, statistic / 2.0);
}

// ---- annotation containers --------------------------------------------------

// One annotator's single-label assignment over a shared item set. A "none"
// label is an ordinary category value.
struct AnnotationSet {
  std::string annotator_id;
  std::map<std::string, std::string> labels;  // item id -> category label
};

inline AnnotationSet load_annotations_csv(const std::filesystem::path& path,
                                          std::string annotator_id = "") {
  AnnotationSet out;
  out.annotator_id = annotator_id.empty() ? path.stem().string() : std::move(annotator_id);
  std::istringstream in(read_file(path));
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = csv_parse_line(line);
    if (first) {
      first = false;
      if (fields.size() >= 2 && fields[0] == "item_id") continue;  // header
    }
    if (fields.size() < 2)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected item_id,label");
    out.labels[fields[0]] = fields[1];
  }
  return out;
}

inline void save_annotations_csv(const AnnotationSet& a,
                                 const std::filesystem::path& path) {
  std::string out = "item_id,label\n";
  for (const auto& [item, label] : a.labels)
    out += csv_escape(item) + "," + csv_escape(label) + "\n";
  write_file(path, out);
}

// Multi-label reference assignments.
struct GoldStandard {
  std::map<std::string, std::set<std::string>> labels;  // item -> topic ids
};

inline GoldStandard load_gold_standard(const std::filesystem::path& path) {
  auto j = nlohmann::json::parse(read_file(path));
  GoldStandard g;
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::set<std::string> ls;
    for (const auto& l : it.value()) ls.insert(l.get<std::string>());
    if (ls.empty())
      throw std::runtime_error("gold standard item with empty label set: " + it.key());
    g.labels[it.key()] = std::move(ls);
  }
  return g;
}

namespace detail {

inline void require_same_items(const AnnotationSet& a, const AnnotationSet& b) {
  if (a.labels.size() != b.labels.size())
    throw std::invalid_argument("annotation sets cover different item sets");
  for (const auto& [item, l] : a.labels)
    if (!b.labels.count(item))
      throw std::invalid_argument("annotation sets cover different item sets: " + item);
}

}  // namespace detail

// ---- agreement statistics ----------------------------------------------------

// Fraction of items tagged with the same category by both annotators.
inline double pairwise_agreement(const AnnotationSet& a, const AnnotationSet& b) {
  detail::require_same_items(a, b);
  if (a.labels.empty()) throw std::invalid_argument("pairwise_agreement: no items");
  std::size_t same = 0;
  for (const auto& [item, la] : a.labels)
    if (b.labels.at(item) == la) ++same;
  return static_cast<double>(same) / static_cast<double>(a.labels.size());
}

// Cohen's kappa with expected agreement from the marginal label distributions.
inline double cohen_kappa(const AnnotationSet& a, const AnnotationSet& b) {
  detail::require_same_items(a, b);
  if (a.labels.empty()) throw std::invalid_argument("cohen_kappa: no items");
  double n = static_cast<double>(a.labels.size());
  double po = pairwise_agreement(a, b);
  std::map<std::string, double> ma, mb;
  for (const auto& [item, la] : a.labels) {
    ma[la] += 1.0;
    mb[b.labels.at(item)] += 1.0;
  }
  double pe = 0.0;
  for (const auto& [label, ca] : ma) {
    auto it = mb.find(label);
    if (it != mb.end()) pe += (ca / n) * (it->second / n);
  }
  if (pe >= 1.0) return po >= 1.0 ? 1.0 : 0.0;
  return (po - pe) / (1.0 - pe);
}

// Fleiss' kappa over an items x categories rating-count matrix; every item
// must be rated by the same number of raters.
inline double fleiss_kappa(const std::vector<std::vector<long long>>& matrix) {
  if (matrix.empty()) throw std::invalid_argument("fleiss_kappa: empty matrix");
  std::size_t cats = matrix.front().size();
  long long raters = 0;
  for (const auto& row : matrix) {
    if (row.size() != cats)
      throw std::invalid_argument("fleiss_kappa: ragged matrix");
    long long sum = 0;
    for (long long c : row) sum += c;
    if (raters == 0) raters = sum;
    if (sum != raters)
      throw std::invalid_argument("fleiss_kappa: unequal rater counts per item");
  }
  if (raters < 2) throw std::invalid_argument("fleiss_kappa: need >= 2 raters");
  double N = static_cast<double>(matrix.size());
  double n = static_cast<double>(raters);
  double p_bar = 0.0;
  std::vector<double> pj(cats, 0.0);
  for (const auto& row : matrix) {
    double sum_sq = 0.0;
    for (std::size_t j = 0; j < cats; ++j) {
      sum_sq += static_cast<double>(row[j]) * static_cast<double>(row[j]);
      pj[j] += static_cast<double>(row[j]);
    }
    p_bar += (sum_sq - n) / (n * (n - 1.0));
  }
  p_bar /= N;
  double pe = 0.0;
  for (std::size_t j = 0; j < cats; ++j) {
    double p = pj[j] / (N * n);
    pe += p * p;
  }
  if (pe >= 1.0) return p_bar >= 1.0 ? 1.0 : 0.0;
  return (p_bar - pe) / (1.0 - pe);
}

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int df = 0;
};

// Pearson chi-square test of homogeneity over the annotators x labels
// contingency table. All-zero label columns are dropped.
inline ChiSquareResult chi_square_homogeneity(const std::vector<AnnotationSet>& groups) {
  if (groups.size() < 2)
    throw std::invalid_argument("chi_square_homogeneity: need >= 2 groups");
  std::set<std::string> label_set;
  for (const auto& g : groups)
    for (const auto& [item, l] : g.labels) label_set.insert(l);
  std::vector<std::string> cols(label_set.begin(), label_set.end());
  if (cols.size() < 2)
    throw std::invalid_argument("chi_square_homogeneity: degenerate table (single label)");
  std::vector<std::vector<double>> table(groups.size(),
                                         std::vector<double>(cols.size(), 0.0));
  for (std::size_t r = 0; r < groups.size(); ++r) {
    for (const auto& [item, l] : groups[r].labels) {
      auto it = std::lower_bound(cols.begin(), cols.end(), l);
      table[r][static_cast<std::size_t>(it - cols.begin())] += 1.0;
    }
  }
  std::vector<double> row_tot(groups.size(), 0.0), col_tot(cols.size(), 0.0);
  double grand = 0.0;
  for (std::size_t r = 0; r < table.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) {
      row_tot[r] += table[r][c];
      col_tot[c] += table[r][c];
      grand += table[r][c];
    }
  if (grand <= 0.0)
    throw std::invalid_argument("chi_square_homogeneity: empty table");
  int effective_cols = 0;
  for (double c : col_tot)
    if (c > 0.0) ++effective_cols;
  if (effective_cols < 2)
    throw std::invalid_argument("chi_square_homogeneity: degenerate table (single label)");
  double stat = 0.0;
  for (std::size_t r = 0; r < table.size(); ++r) {
    if (row_tot[r] <= 0.0)
      throw std::invalid_argument("chi_square_homogeneity: empty group row");
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (col_tot[c] <= 0.0) continue;
      double expected = row_tot[r] * col_tot[c] / grand;
      double diff = table[r][c] - expected;
      stat += diff * diff / expected;
    }
  }
  int df = (static_cast<int>(table.size()) - 1) * (effective_cols - 1);
  return {stat, chi_square_sf(stat, df), df};
}

struct McNemarResult {
  double statistic = 0.0;
  double p_value = 1.0;
  long long b = 0;  // a correct, b wrong
  long long c = 0;  // a wrong, b correct
};

// Continuity-corrected McNemar test on per-item correctness vectors.
inline McNemarResult mcnemar(const std::map<std::string, bool>& a_correct,
                             const std::map<std::string, bool>& b_correct) {
  if (a_correct.size() != b_correct.size())
    throw std::invalid_argument("mcnemar: item sets differ");
  McNemarResult out;
  for (const auto& [item, a_ok] : a_correct) {
    auto it = b_correct.find(item);
    if (it == b_correct.end())
      throw std::invalid_argument("mcnemar: item sets differ: " + item);
    if (a_ok && !it->second) ++out.b;
    if (!a_ok && it->second) ++out.c;
  }
  if (out.b + out.c == 0) {
    out.statistic = 0.0;
    out.p_value = 1.0;
    return out;
  }
  double d = std::fabs(static_cast<double>(out.b - out.c)) - 1.0;
  out.statistic = d * d / static_cast<double>(out.b + out.c);
  out.p_value = chi_square_sf(out.statistic, 1);
  return out;
}

struct PrfResult {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f_measure;
};

// Micro-averaged precision/recall/F over label instances. With no predicted
// labels at all: precision 1 if the gold is also empty, otherwise undefined.
inline PrfResult prf(const std::map<std::string, std::set<std::string>>& predicted,
                     const GoldStandard& gold) {
  if (predicted.size() != gold.labels.size())
    throw std::invalid_argument("prf: item sets differ");
  long long n_pred = 0, n_gold = 0, hits = 0;
  for (const auto& [item, pred] : predicted) {
    auto it = gold.labels.find(item);
    if (it == gold.labels.end())
      throw std::invalid_argument("prf: item sets differ: " + item);
    n_pred += static_cast<long long>(pred.size());
    n_gold += static_cast<long long>(it->second.size());
    for (const auto& l : pred)
      if (it->second.count(l)) ++hits;
  }
  PrfResult out;
  if (n_pred > 0)
    out.precision = static_cast<double>(hits) / static_cast<double>(n_pred);
  else if (n_gold == 0)
    out.precision = 1.0;
  if (n_gold > 0) out.recall = static_cast<double>(hits) / static_cast<double>(n_gold);
  if (out.precision && out.recall) {
    double p = *out.precision, r = *out.recall;
    out.f_measure = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  return out;
}

// For each annotator, the distribution (over items) of how many other
// annotators assigned the same label; bucket n ranges over [0, m-1].
inline std::map<std::string, std::vector<double>> agree_with_n(
    const std::vector<AnnotationSet>& all) {
  if (all.size() < 2) throw std::invalid_argument("agree_with_n: need >= 2 annotators");
  for (std::size_t i = 1; i < all.size(); ++i)
    detail::require_same_items(all.front(), all[i]);
  std::map<std::string, std::vector<double>> out;
  std::size_t m = all.size();
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> hist(m, 0.0);
    for (const auto& [item, label] : all[i].labels) {
      std::size_t n = 0;
      for (std::size_t j = 0; j < m; ++j) {
        if (j == i) continue;
        if (all[j].labels.at(item) == label) ++n;
      }
      hist[n] += 1.0;
    }
    double total = static_cast<double>(all[i].labels.size());
    for (auto& h : hist) h /= total;
    out[all[i].annotator_id] = std::move(hist);
  }
  return out;
}

struct MajorityResult {
  AnnotationSet labels;
  std::set<std::string> tied_items;  // resolved to the none label
};

// Relative-majority label per item; ties resolve to `none_label` and are
// flagged.
inline MajorityResult majority_label(const std::vector<AnnotationSet>& all,
                                     const std::string& none_label = "none") {
  if (all.empty()) throw std::invalid_argument("majority_label: no annotators");
  for (std::size_t i = 1; i < all.size(); ++i)
    detail::require_same_items(all.front(), all[i]);
  MajorityResult out;
  out.labels.annotator_id = "majority";
  for (const auto& [item, l0] : all.front().labels) {
    std::map<std::string, int> counts;
    for (const auto& a : all) counts[a.labels.at(item)] += 1;
    int best = 0;
    for (const auto& [label, c] : counts) best = std::max(best, c);
    std::vector<std::string> winners;
    for (const auto& [label, c] : counts)
      if (c == best) winners.push_back(label);
    if (winners.size() == 1) {
      out.labels.labels[item] = winners.front();
    } else {
      out.labels.labels[item] = none_label;
      out.tied_items.insert(item);
    }
  }
  return out;
}

}  // namespace revmap
