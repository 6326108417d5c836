#include "nidslabel/evaluation.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <json.hpp>

#include "nidslabel/error.hpp"

namespace nidslabel {

MicroMetrics micro_metrics(const ConfusionCounts& c) {
  auto ratio = [](std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  MicroMetrics m;
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

TacticSet derive_tactic_labels(const TechniqueSet& techniques, const AttackCatalog& catalog) {
  TacticSet out;
  for (const auto& t : techniques) {
    const auto& tactics = catalog.tactics_of(t);
    out.insert(tactics.begin(), tactics.end());
  }
  return out;
}

TechniqueSet roll_up(const TechniqueSet& techniques) {
  TechniqueSet out;
  for (const auto& t : techniques) out.insert(parent_of(t).value_or(t));
  return out;
}

std::string_view to_string(EvalLevel l) noexcept { return l == EvalLevel::tactic ? "tactic" : "technique"; }

EvalLevel parse_eval_level(std::string_view s) {
  if (s == "technique") return EvalLevel::technique;
  if (s == "tactic") return EvalLevel::tactic;
  throw ValidationError("unknown evaluation level '" + std::string(s) + "'");
}

namespace {

std::set<std::string> as_strings(const TechniqueSet& s) {
  std::set<std::string> out;
  for (const auto& t : s) out.insert(t.str());
  return out;
}

std::set<std::string> as_strings(const TacticSet& s) {
  std::set<std::string> out;
  for (const auto& t : s) out.insert(t.str());
  return out;
}

void add_per_label(std::map<std::string, ConfusionCounts>& per_label, const std::set<std::string>& gold,
                   const std::set<std::string>& pred) {
  for (const auto& p : pred) (gold.count(p) ? per_label[p].tp : per_label[p].fp) += 1;
  for (const auto& g : gold)
    if (!pred.count(g)) per_label[g].fn += 1;
}

}  // namespace

EvalReport evaluate_predictor(const LabeledDataset& ds, const Predictor& predict, const AttackCatalog& catalog,
                              const EvalOptions& options) {
  if (ds.empty()) throw ValidationError("cannot evaluate on an empty dataset");
  EvalReport report;
  report.level = options.level;
  report.rollup = options.rollup;
  report.n_rules = ds.size();
  for (const auto& rule : ds.rules()) {
    TechniqueSet pred;
    try {
      pred = predict(rule);
    } catch (const std::exception& e) {
      if (options.strict) throw;
      ++report.failures;
      report.diagnostics.push_back("sid " + std::to_string(rule.sid) + ": predictor failed: " + e.what());
    }
    std::set<std::string> gold_labels, pred_labels;
    if (options.level == EvalLevel::tactic) {
      gold_labels = as_strings(derive_tactic_labels(rule.technique_ids, catalog));
      pred_labels = as_strings(derive_tactic_labels(pred, catalog));
    } else if (options.rollup) {
      gold_labels = as_strings(roll_up(rule.technique_ids));
      pred_labels = as_strings(roll_up(pred));
    } else {
      gold_labels = as_strings(rule.technique_ids);
      pred_labels = as_strings(pred);
    }
    report.counts += compare_sets(gold_labels, pred_labels);
    add_per_label(report.per_label, gold_labels, pred_labels);
  }
  report.metrics = micro_metrics(report.counts);
  return report;
}

EvalReport evaluate_predictions(const LabeledDataset& ds, const std::map<std::uint64_t, TechniqueSet>& predictions,
                                const AttackCatalog& catalog, const EvalOptions& options) {
  std::vector<std::string> missing;
  auto report = evaluate_predictor(
      ds,
      [&](const LabeledRule& r) {
        auto it = predictions.find(r.sid);
        if (it == predictions.end()) {
          missing.push_back("sid " + std::to_string(r.sid) + ": no prediction, scored as empty");
          return TechniqueSet{};
        }
        return it->second;
      },
      catalog, options);
  report.diagnostics.insert(report.diagnostics.end(), missing.begin(), missing.end());
  return report;
}

std::string report_to_json(const EvalReport& r, bool per_label) {
  nlohmann::ordered_json doc;
  doc["level"] = std::string(to_string(r.level));
  doc["rollup"] = r.rollup;
  doc["n_rules"] = r.n_rules;
  doc["precision"] = r.metrics.precision;
  doc["recall"] = r.metrics.recall;
  doc["f1"] = r.metrics.f1;
  doc["counts"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}};
  doc["failures"] = r.failures;
  if (per_label) {
    auto labels = nlohmann::ordered_json::object();
    for (const auto& [label, c] : r.per_label) {
      const auto m = micro_metrics(c);
      labels[label] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn},
                       {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
    }
    doc["per_label"] = std::move(labels);
  }
  doc["diagnostics"] = r.diagnostics;
  return doc.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& r, bool per_label) {
  std::string out = fmt::format("level: {}{}  rules: {}  failures: {}\n", to_string(r.level),
                                r.rollup ? " (rolled up)" : "", r.n_rules, r.failures);
  out += fmt::format("{:<12} {:>6} {:>6} {:>6} {:>9} {:>9} {:>9}\n", "label", "tp", "fp", "fn", "precision",
                     "recall", "f1");
  auto line = [&](const std::string& name, const ConfusionCounts& c) {
    const auto m = micro_metrics(c);
    out += fmt::format("{:<12} {:>6} {:>6} {:>6} {:>9.4f} {:>9.4f} {:>9.4f}\n", name, c.tp, c.fp, c.fn, m.precision,
                       m.recall, m.f1);
  };
  if (per_label)
    for (const auto& [label, c] : r.per_label) line(label, c);
  line("micro", r.counts);
  return out;
}

std::string results_table_text(const std::vector<ResultsRow>& rows) {
  std::size_t width = 9;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::string out = fmt::format("{:<{}} | {:^26} | {:^26}\n", "", width, "Technique", "Tactic");
  out += fmt::format("{:<{}} | {:>8} {:>8} {:>8} | {:>8} {:>8} {:>8}\n", "predictor", width, "P", "R", "F1", "P", "R",
                     "F1");
  out += std::string(width + 58, '-') + "\n";
  auto cells = [](const std::optional<MicroMetrics>& m) {
    if (!m) return fmt::format("{:>8} {:>8} {:>8}", "N/A", "N/A", "N/A");
    return fmt::format("{:>8.2f} {:>8.2f} {:>8.2f}", m->precision, m->recall, m->f1);
  };
  for (const auto& r : rows)
    out += fmt::format("{:<{}} | {} | {}\n", r.name, width, cells(r.technique), cells(r.tactic));
  return out;
}

std::string results_table_json(const std::vector<ResultsRow>& rows) {
  auto doc = nlohmann::ordered_json::array();
  auto level = [](const std::optional<MicroMetrics>& m) -> nlohmann::ordered_json {
    if (!m) return "N/A";
    return {{"precision", m->precision}, {"recall", m->recall}, {"f1", m->f1}};
  };
  for (const auto& r : rows)
    doc.push_back({{"predictor", r.name}, {"technique", level(r.technique)}, {"tactic", level(r.tactic)}});
  return doc.dump(2) + "\n";
}

}  // namespace nidslabel
