#include "nidslabel/baselines.hpp"

#include <algorithm>

#include "nidslabel/error.hpp"
#include "nidslabel/evaluation.hpp"
#include "nidslabel/random.hpp"

namespace nidslabel {

TechniqueSet top_k_techniques(const LabelCounts& counts, std::size_t k) {
  std::vector<std::pair<TechniqueId, std::size_t>> order(counts.begin(), counts.end());
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  TechniqueSet out;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) out.insert(order[i].first);
  return out;
}

BaselinePredictor fit_top_k(const LabeledDataset& train, std::size_t k) {
  if (k < 1) throw ValidationError("top-k needs k >= 1");
  if (train.empty()) throw ValidationError("top-k needs a non-empty training set");
  auto counts = label_frequencies(train);
  if (k > counts.size())
    throw ValidationError("top-" + std::to_string(k) + " requested but only " + std::to_string(counts.size()) +
                          " distinct training labels");
  BaselinePredictor p;
  p.kind = BaselineKind::top_k;
  p.k = k;
  p.frequency_table = std::move(counts);
  return p;
}

BaselinePredictor make_random_within_tactic(std::size_t k, std::uint64_t seed) {
  if (k < 1) throw ValidationError("RT-k needs k >= 1");
  BaselinePredictor p;
  p.kind = BaselineKind::random_within_tactic;
  p.k = k;
  p.seed = seed;
  return p;
}

std::vector<TechniqueId> tactic_pool(const AttackCatalog& catalog, const TacticSet& gold_tactics) {
  std::vector<TechniqueId> pool;
  for (const auto& e : catalog.active_entries()) {
    const bool hit = std::any_of(e.tactic_ids.begin(), e.tactic_ids.end(),
                                 [&](const TacticId& t) { return gold_tactics.count(t) != 0; });
    if (hit) pool.push_back(e.id);
  }
  return pool;
}

TechniqueSet random_within_tactic(const AttackCatalog& catalog, const TacticSet& gold_tactics, std::size_t k,
                                  std::uint64_t seed, std::uint64_t sid) {
  auto pool = tactic_pool(catalog, gold_tactics);
  if (pool.size() <= k) return {pool.begin(), pool.end()};
  Rng rng(mix_seed(seed, sid));
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform_index(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  return {pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k)};
}

TechniqueSet BaselinePredictor::predict(const LabeledRule& rule, const AttackCatalog& catalog) const {
  if (kind == BaselineKind::top_k) {
    if (!frequency_table) throw ValidationError("top-k baseline is not fitted");
    return top_k_techniques(*frequency_table, k);
  }
  if (!seed) throw ValidationError("RT-k baseline needs a seed");
  return random_within_tactic(catalog, derive_tactic_labels(rule.technique_ids, catalog), k, *seed, rule.sid);
}

std::string BaselinePredictor::name() const {
  return (kind == BaselineKind::top_k ? "Top-" : "RT-") + std::to_string(k);
}

}  // namespace nidslabel
