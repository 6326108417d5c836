#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nidslabel/attack_catalog.hpp"
#include "nidslabel/dataset.hpp"

namespace nidslabel {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const ConfusionCounts&) const = default;
};

struct MicroMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Any 0/0 quotient is 0.
MicroMetrics micro_metrics(const ConfusionCounts& c);

template <class T>
ConfusionCounts compare_sets(const std::set<T>& gold, const std::set<T>& pred) {
  ConfusionCounts c;
  for (const auto& p : pred) (gold.count(p) ? c.tp : c.fp) += 1;
  for (const auto& g : gold)
    if (!pred.count(g)) c.fn += 1;
  return c;
}

// Union of the tactics of every technique; unknown ids throw LookupError.
TacticSet derive_tactic_labels(const TechniqueSet& techniques, const AttackCatalog& catalog);

// Maps sub-techniques to their parents.
TechniqueSet roll_up(const TechniqueSet& techniques);

enum class EvalLevel { technique, tactic };
std::string_view to_string(EvalLevel l) noexcept;
EvalLevel parse_eval_level(std::string_view s);

struct EvalOptions {
  EvalLevel level = EvalLevel::technique;
  bool rollup = false;  // score technique level at parent granularity
  bool strict = false;  // a predictor failure aborts instead of scoring as empty
};

struct EvalReport {
  EvalLevel level = EvalLevel::technique;
  bool rollup = false;
  MicroMetrics metrics;
  ConfusionCounts counts;
  std::map<std::string, ConfusionCounts> per_label;
  std::size_t n_rules = 0;
  std::size_t failures = 0;
  std::vector<std::string> diagnostics;
};

using Predictor = std::function<TechniqueSet(const LabeledRule&)>;

EvalReport evaluate_predictor(const LabeledDataset& ds, const Predictor& predict, const AttackCatalog& catalog,
                              const EvalOptions& options = {});

// Scores precomputed predictions keyed by sid; rules without an entry are
// scored as empty predictions and noted in the diagnostics.
EvalReport evaluate_predictions(const LabeledDataset& ds, const std::map<std::uint64_t, TechniqueSet>& predictions,
                                const AttackCatalog& catalog, const EvalOptions& options = {});

std::string report_to_json(const EvalReport& r, bool per_label = false);
std::string report_to_table(const EvalReport& r, bool per_label = false);

// One row of a results table: technique and tactic level P/R/F1. A missing
// level renders as "N/A".
struct ResultsRow {
  std::string name;
  std::optional<MicroMetrics> technique;
  std::optional<MicroMetrics> tactic;
};

std::string results_table_text(const std::vector<ResultsRow>& rows);
std::string results_table_json(const std::vector<ResultsRow>& rows);

}  // namespace nidslabel
