#pragma once

// Independent reference implementations used to check library results.
// They share no code with the library and favour obviousness over speed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

struct Counts {
  std::int64_t tp = 0, fp = 0, fn = 0;
};

// Walks every label of the combined universe for every rule and classifies
// each (rule, label) cell.
inline Counts brute_force_counts(const std::vector<std::set<std::string>>& gold,
                                 const std::vector<std::set<std::string>>& pred) {
  std::set<std::string> universe;
  for (const auto& g : gold) universe.insert(g.begin(), g.end());
  for (const auto& p : pred) universe.insert(p.begin(), p.end());
  Counts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (const auto& label : universe) {
      const bool in_gold = std::find(gold[i].begin(), gold[i].end(), label) != gold[i].end();
      const bool in_pred = std::find(pred[i].begin(), pred[i].end(), label) != pred[i].end();
      if (in_gold && in_pred) ++c.tp;
      if (!in_gold && in_pred) ++c.fp;
      if (in_gold && !in_pred) ++c.fn;
    }
  }
  return c;
}

struct Ratios {
  double precision, recall, f1;
};

// F1 from the count form 2tp / (2tp + fp + fn), which avoids going through
// precision and recall; 0/0 is 0.
inline Ratios ratios(const Counts& c) {
  auto q = [](std::int64_t n, std::int64_t d) { return d == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(d); };
  return {q(c.tp, c.tp + c.fp), q(c.tp, c.tp + c.fn), q(2 * c.tp, 2 * c.tp + c.fp + c.fn)};
}

// k most frequent labels by repeated selection of the maximum; ties go to
// the smaller id.
inline std::set<std::string> top_k(const std::vector<std::set<std::string>>& label_sets, std::size_t k) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : label_sets)
    for (const auto& l : s) ++counts[l];
  std::set<std::string> chosen;
  for (std::size_t round = 0; round < k; ++round) {
    std::string best;
    std::size_t best_n = 0;
    for (const auto& [label, n] : counts) {
      if (chosen.count(label)) continue;
      if (best.empty() || n > best_n || (n == best_n && label < best)) {
        best = label;
        best_n = n;
      }
    }
    if (best.empty()) break;
    chosen.insert(best);
  }
  return chosen;
}

// Smoothed inverse document frequency over pre-tokenized documents.
inline std::map<std::string, double> idf(const std::vector<std::vector<std::string>>& docs) {
  std::map<std::string, std::size_t> df;
  for (const auto& d : docs) {
    std::set<std::string> seen(d.begin(), d.end());
    for (const auto& t : seen) ++df[t];
  }
  std::map<std::string, double> out;
  const double n = static_cast<double>(docs.size());
  for (const auto& [t, f] : df) out[t] = std::log((1.0 + n) / (1.0 + static_cast<double>(f))) + 1.0;
  return out;
}

}  // namespace oracle
