#pragma once

#include <span>
#include <vector>

#include "nidslabel/evaluation.hpp"
#include "nidslabel/prompting.hpp"

namespace nidslabel {

struct PromptCandidateResult {
  PromptConfig config;
  EvalReport report;           // technique level
  std::size_t prompt_tokens;   // rendered prompt tokens summed over the dev set
  std::size_t input_index;     // position in the input list
};

struct PromptSearchResult {
  std::vector<PromptCandidateResult> ranked;  // best first
  PromptConfig best;
};

// Runs every configuration over `dev` through the same client, in input
// order, and ranks by technique-level micro F1, then fewer prompt tokens.
// Rules whose labeling fails score as empty predictions.
PromptSearchResult select_best_prompt(std::span<const PromptConfig> configs, const LabeledDataset& dev,
                                      ChatClient& client, const AttackCatalog& catalog,
                                      std::span<const IclExample> examples, const LlmOptions& options = {});

}  // namespace nidslabel
