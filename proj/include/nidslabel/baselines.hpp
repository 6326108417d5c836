#pragma once

#include <cstdint>
#include <optional>

#include "nidslabel/attack_catalog.hpp"
#include "nidslabel/dataset.hpp"

namespace nidslabel {

enum class BaselineKind { top_k, random_within_tactic };

// Top-k: constant prediction of the k most frequent training techniques.
// RT-k: k techniques drawn uniformly from those sharing a tactic with the
// rule's gold techniques (the analyst is assumed to know the tactic).
struct BaselinePredictor {
  BaselineKind kind = BaselineKind::top_k;
  std::size_t k = 1;
  std::optional<LabelCounts> frequency_table;
  std::optional<std::uint64_t> seed;

  TechniqueSet predict(const LabeledRule& rule, const AttackCatalog& catalog) const;
  std::string name() const;  // "Top-1", "RT-2", ...
};

// The k highest counts, ties broken by ascending id.
TechniqueSet top_k_techniques(const LabelCounts& counts, std::size_t k);

BaselinePredictor fit_top_k(const LabeledDataset& train, std::size_t k);
BaselinePredictor make_random_within_tactic(std::size_t k, std::uint64_t seed);

// Non-deprecated catalog techniques with a tactic in gold_tactics, id order.
std::vector<TechniqueId> tactic_pool(const AttackCatalog& catalog, const TacticSet& gold_tactics);

// Sample without replacement, seeded by (seed, sid). A pool smaller than k
// is returned whole.
TechniqueSet random_within_tactic(const AttackCatalog& catalog, const TacticSet& gold_tactics, std::size_t k,
                                  std::uint64_t seed, std::uint64_t sid);

}  // namespace nidslabel
