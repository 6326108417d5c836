#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nidslabel/attack_catalog.hpp"
#include "nidslabel/snort_rule.hpp"

namespace nidslabel {

struct LabeledRule {
  std::uint64_t sid = 0;
  SnortRule rule;
  TechniqueSet technique_ids;

  bool operator==(const LabeledRule&) const = default;
};

// Rules in a fixed order with unique sids. The label universe is the sorted
// union of all rule labels and is recomputed on construction.
class LabeledDataset {
 public:
  LabeledDataset() = default;
  explicit LabeledDataset(std::vector<LabeledRule> rules);

  const std::vector<LabeledRule>& rules() const noexcept { return rules_; }
  const std::vector<TechniqueId>& label_universe() const noexcept { return universe_; }
  std::size_t size() const noexcept { return rules_.size(); }
  bool empty() const noexcept { return rules_.empty(); }

  bool operator==(const LabeledDataset& o) const { return rules_ == o.rules_; }

 private:
  std::vector<LabeledRule> rules_;
  std::vector<TechniqueId> universe_;
};

using LabelCounts = std::map<TechniqueId, std::size_t>;

LabelCounts label_frequencies(const LabeledDataset& ds);

struct IngestOptions {
  bool strict = true;
};

struct IngestResult {
  LabeledDataset dataset;
  std::vector<std::string> diagnostics;
  std::size_t unlabeled_dropped = 0;   // parsed rules with no mapping row
  std::size_t rule_parse_failures = 0;
};

// Joins a rules file with a `sid,technique_id` CSV label map. Strict mode
// turns unknown sids and invalid technique ids into ValidationErrors; lenient
// mode records them as diagnostics and skips the row.
IngestResult ingest(const std::filesystem::path& rules_file, const std::filesystem::path& label_map_file,
                    const AttackCatalog& catalog, IngestOptions options = {});

IngestResult ingest_text(std::string_view rules_text, std::string_view label_map_csv,
                         const AttackCatalog& catalog, IngestOptions options = {});

struct RarePartition {
  LabeledDataset core;
  LabeledDataset rare;
  std::vector<TechniqueId> rare_techniques;
};

// Techniques occurring fewer than `min_count` times are rare. Rare labels are
// stripped from rules that also carry a frequent label; rules left with no
// frequent label move to `rare` with their original label set.
RarePartition partition_rare(const LabeledDataset& ds, std::size_t min_count);

struct TrainTestSplit {
  LabeledDataset train;
  LabeledDataset test;
};

// Iterative multi-label stratification, rarest label first, followed by a
// repair pass so that every label's train count is within one rule of
// train_frac * count and every label has at least one rule on each side.
TrainTestSplit stratified_split(const LabeledDataset& ds, double train_frac, std::uint64_t seed);

// JSONL persistence: {sid, rule, techniques, split?} per line.
enum class SplitTag { none, train, test, rare };

struct DatasetRow {
  LabeledRule rule;
  SplitTag split = SplitTag::none;
};

std::string to_jsonl(const LabeledDataset& ds, SplitTag tag = SplitTag::none);
void save_jsonl(const std::filesystem::path& path, const LabeledDataset& ds,
                SplitTag tag = SplitTag::none);
std::vector<DatasetRow> parse_jsonl(std::string_view text);
// Loads every row; when `only` is set, keeps rows with that split tag.
LabeledDataset load_jsonl(const std::filesystem::path& path, std::optional<SplitTag> only = {});

std::string_view to_string(SplitTag tag) noexcept;

}  // namespace nidslabel
