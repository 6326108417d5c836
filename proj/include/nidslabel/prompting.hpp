#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nidslabel/attack_catalog.hpp"
#include "nidslabel/chat_client.hpp"
#include "nidslabel/dataset.hpp"
#include "nidslabel/snort_rule.hpp"

namespace nidslabel {

struct CompetitionConfig {
  std::size_t batch_count = 11;
  std::size_t rounds = 3;
};

// One prompt-template configuration: techniques guide on/off, 0-2 in-context
// examples and optional competition questioning.
struct PromptConfig {
  std::string name;
  bool use_technique_guide = true;
  int icl_count = 0;
  std::optional<CompetitionConfig> competition;
  double temperature = 0.0;

  void validate() const;  // throws ValidationError
  // "T-ICL2", "ICL0", "T-ICL1+CQ" ... when no explicit name is set.
  std::string display_name() const;
};

struct IclExample {
  std::string rule_text;
  TechniqueSet technique_ids;
};

// Task text with the placeholders {RULE}, {TECHNIQUE_LIST} and {EXAMPLES}.
// A line that holds only a placeholder which renders empty is dropped.
class PromptTemplate {
 public:
  explicit PromptTemplate(std::string text);
  static const PromptTemplate& builtin();
  static PromptTemplate load(const std::filesystem::path& path);

  const std::string& text() const noexcept { return text_; }
  std::string render(std::string_view rule, std::string_view technique_list, std::string_view examples) const;

 private:
  std::string text_;
};

struct Prompt {
  std::string task_spec;                // template text
  std::optional<std::string> context;   // techniques guide block
  std::optional<std::string> guidance;  // in-context examples block
  std::string rule_text;
  std::string rendered;
};

// "Choose only from ..." header plus one "id - name" line per entry.
std::string technique_guide(std::span<const TechniqueEntry> entries);
std::string examples_block(std::span<const IclExample> examples);

// The guide lists `guide_subset` when given, otherwise every non-deprecated
// catalog entry (only when config.use_technique_guide).
Prompt build_prompt(const PromptConfig& config, const SnortRule& rule, const AttackCatalog& catalog,
                    std::span<const IclExample> examples, const PromptTemplate& tmpl = PromptTemplate::builtin(),
                    std::optional<std::span<const TechniqueEntry>> guide_subset = std::nullopt);

std::size_t prompt_token_count(std::string_view rendered);

struct ParsedTechniques {
  TechniqueSet ids;
  std::vector<std::string> unknown;  // well-formed ids missing from the catalog
};

// Every `T####` / `T####.###` not glued to other alphanumerics, deduplicated,
// restricted to catalog ids.
ParsedTechniques parse_techniques(std::string_view text, const AttackCatalog& catalog);

struct RetryPolicy {
  std::size_t max_retries = 3;
  std::chrono::milliseconds base_backoff{500};
};

struct LlmOptions {
  const PromptTemplate* tmpl = nullptr;  // builtin when null
  RetryPolicy retry;
};

struct PredictionSet {
  TechniqueSet technique_ids;
  std::string raw_response;
  std::optional<std::string> explanation;
  std::size_t requests = 0;
  std::size_t retries = 0;
  std::vector<std::string> diagnostics;
};

// Sends with bounded exponential backoff on TransportError; after the last
// retry throws LabelingError carrying `sid`.
ChatResponse send_with_retry(ChatClient& client, const ChatRequest& request, const RetryPolicy& retry,
                             long long sid, std::size_t& retries_out);

// Single-shot labeling: build_prompt, send, parse_techniques.
PredictionSet label_with_llm(ChatClient& client, const PromptConfig& config, const SnortRule& rule,
                             const AttackCatalog& catalog, std::span<const IclExample> examples,
                             const LlmOptions& options = {});

// Batch-wise labeling over the non-deprecated catalog, then `rounds`
// refinement queries restricted to the pool, each answer intersected with
// the pool. Refinement stops early once the pool is empty.
PredictionSet competition_label(ChatClient& client, const PromptConfig& config, const SnortRule& rule,
                                const AttackCatalog& catalog, std::span<const IclExample> examples,
                                const LlmOptions& options = {});

// competition_label when config.competition is set, label_with_llm otherwise.
PredictionSet label_rule(ChatClient& client, const PromptConfig& config, const SnortRule& rule,
                         const AttackCatalog& catalog, std::span<const IclExample> examples,
                         const LlmOptions& options = {});

// Up to `count` training rules: for each technique in descending frequency
// (ties by id) the first rule in dataset order carrying it not yet chosen.
std::vector<IclExample> select_icl_examples(const LabeledDataset& train, std::size_t count);

}  // namespace nidslabel
