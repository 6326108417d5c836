#include "nidslabel/prompt_search.hpp"

#include <algorithm>

#include "nidslabel/error.hpp"

namespace nidslabel {

PromptSearchResult select_best_prompt(std::span<const PromptConfig> configs, const LabeledDataset& dev,
                                      ChatClient& client, const AttackCatalog& catalog,
                                      std::span<const IclExample> examples, const LlmOptions& options) {
  if (configs.empty()) throw ValidationError("prompt search needs at least one configuration");
  const auto& tmpl = options.tmpl ? *options.tmpl : PromptTemplate::builtin();
  PromptSearchResult result;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const auto& config = configs[c];
    config.validate();
    std::size_t tokens = 0;
    for (const auto& r : dev.rules()) tokens += prompt_token_count(build_prompt(config, r.rule, catalog, examples, tmpl).rendered);
    auto report = evaluate_predictor(
        dev,
        [&](const LabeledRule& r) { return label_rule(client, config, r.rule, catalog, examples, options).technique_ids; },
        catalog, EvalOptions{EvalLevel::technique, false, false});
    result.ranked.push_back({config, std::move(report), tokens, c});
  }
  std::stable_sort(result.ranked.begin(), result.ranked.end(), [](const auto& a, const auto& b) {
    if (a.report.metrics.f1 != b.report.metrics.f1) return a.report.metrics.f1 > b.report.metrics.f1;
    return a.prompt_tokens < b.prompt_tokens;
  });
  result.best = result.ranked.front().config;
  return result;
}

}  // namespace nidslabel
