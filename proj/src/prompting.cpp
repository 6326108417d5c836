#include "nidslabel/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>

#include "default_template.hpp"
#include "nidslabel/error.hpp"

namespace nidslabel {

void PromptConfig::validate() const {
  if (icl_count < 0 || icl_count > 2) throw ValidationError("icl_count must be 0, 1 or 2");
  if (competition) {
    if (competition->rounds < 1) throw ValidationError("competition rounds must be >= 1");
    if (competition->batch_count < 1) throw ValidationError("competition batch_count must be >= 1");
  }
  if (temperature < 0) throw ValidationError("temperature must be >= 0");
}

std::string PromptConfig::display_name() const {
  if (!name.empty()) return name;
  std::string n = use_technique_guide ? "T-ICL" : "ICL";
  n += std::to_string(icl_count);
  if (competition) n += "+CQ";
  return n;
}

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
  if (text_.find("{RULE}") == std::string::npos) throw ValidationError("prompt template lacks {RULE}");
}

const PromptTemplate& PromptTemplate::builtin() {
  static const PromptTemplate tmpl{std::string(detail::kDefaultTemplate)};
  return tmpl;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open prompt template " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return PromptTemplate(buf.str());
}

std::string PromptTemplate::render(std::string_view rule, std::string_view technique_list,
                                   std::string_view examples) const {
  const std::pair<std::string_view, std::string_view> slots[] = {
      {"{RULE}", rule}, {"{TECHNIQUE_LIST}", technique_list}, {"{EXAMPLES}", examples}};
  std::string out;
  std::istringstream in(text_);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    bool drop = false;
    for (const auto& [key, value] : slots)
      if (line == key && value.empty()) drop = true;
    if (drop) continue;
    std::string rendered;
    for (std::size_t i = 0; i < line.size();) {
      bool replaced = false;
      for (const auto& [key, value] : slots) {
        if (line.compare(i, key.size(), key) == 0) {
          rendered.append(value);
          i += key.size();
          replaced = true;
          break;
        }
      }
      if (!replaced) rendered.push_back(line[i++]);
    }
    if (!first) out.push_back('\n');
    out += rendered;
    first = false;
  }
  return out;
}

std::string technique_guide(std::span<const TechniqueEntry> entries) {
  std::string out = "Choose only from the following MITRE ATT&CK techniques (ID - name):";
  for (const auto& e : entries) out += "\n" + e.id.str() + " - " + e.name;
  out += "\n";
  return out;
}

namespace {

std::string id_list(const TechniqueSet& ids) {
  if (ids.empty()) return "none";
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ", ";
    out += id.str();
  }
  return out;
}

}  // namespace

std::string examples_block(std::span<const IclExample> examples) {
  std::string out = "Examples of correctly labeled rules:\n";
  for (std::size_t i = 0; i < examples.size(); ++i) {
    out += "\nExample " + std::to_string(i + 1) + ":\nRule: " + examples[i].rule_text + "\nTECHNIQUES: " +
           id_list(examples[i].technique_ids) + "\n";
  }
  return out;
}

Prompt build_prompt(const PromptConfig& config, const SnortRule& rule, const AttackCatalog& catalog,
                    std::span<const IclExample> examples, const PromptTemplate& tmpl,
                    std::optional<std::span<const TechniqueEntry>> guide_subset) {
  config.validate();
  if (examples.size() < static_cast<std::size_t>(config.icl_count))
    throw ValidationError("prompt needs " + std::to_string(config.icl_count) + " in-context examples, " +
                          std::to_string(examples.size()) + " available");
  Prompt p;
  p.task_spec = tmpl.text();
  p.rule_text = rule.raw.empty() ? serialize_rule(rule) : rule.raw;
  if (guide_subset) {
    p.context = technique_guide(*guide_subset);
  } else if (config.use_technique_guide) {
    const auto active = catalog.active_entries();
    p.context = technique_guide(active);
  }
  if (config.icl_count > 0) p.guidance = examples_block(examples.first(static_cast<std::size_t>(config.icl_count)));
  p.rendered = tmpl.render(p.rule_text, p.context.value_or(""), p.guidance.value_or(""));
  return p;
}

std::size_t prompt_token_count(std::string_view rendered) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : rendered) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

ParsedTechniques parse_techniques(std::string_view text, const AttackCatalog& catalog) {
  ParsedTechniques out;
  auto digit = [&](std::size_t i) { return i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); };
  auto alnum = [&](std::size_t i) { return i < text.size() && std::isalnum(static_cast<unsigned char>(text[i])); };
  std::set<std::string> unknown;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != 'T' || (i > 0 && alnum(i - 1))) continue;
    if (!(digit(i + 1) && digit(i + 2) && digit(i + 3) && digit(i + 4))) continue;
    std::size_t len = 5;
    if (i + 5 < text.size() && text[i + 5] == '.' && digit(i + 6) && digit(i + 7) && digit(i + 8) && !alnum(i + 9))
      len = 9;
    else if (alnum(i + 5) || (i + 5 < text.size() && text[i + 5] == '.' && digit(i + 6)))
      continue;
    TechniqueId id(text.substr(i, len));
    if (catalog.contains(id))
      out.ids.insert(id);
    else
      unknown.insert(id.str());
    i += len - 1;
  }
  out.unknown.assign(unknown.begin(), unknown.end());
  return out;
}

ChatResponse send_with_retry(ChatClient& client, const ChatRequest& request, const RetryPolicy& retry,
                             long long sid, std::size_t& retries_out) {
  for (std::size_t attempt = 0;; ++attempt) {
    try {
      return client.send(request);
    } catch (const TransportError& e) {
      if (attempt >= retry.max_retries)
        throw LabelingError(std::string("transport failed after ") + std::to_string(attempt) + " retries: " + e.what(),
                            sid);
      ++retries_out;
      const auto delay = retry.base_backoff * (1LL << std::min<std::size_t>(attempt, 6));
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
    }
  }
}

namespace {

long long sid_of(const SnortRule& rule) { return rule.sid ? static_cast<long long>(*rule.sid) : -1; }

std::optional<std::string> explanation_of(std::string_view reply) {
  std::istringstream in{std::string(reply)};
  std::string line, out;
  while (std::getline(in, line)) {
    auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;
    if (line.compare(start, 11, "TECHNIQUES:") == 0) continue;
    if (!out.empty()) out += '\n';
    auto end = line.find_last_not_of(" \t\r");
    out += line.substr(start, end - start + 1);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

struct Exchange {
  std::optional<ParsedTechniques> parsed;
  std::string reply;
};

Exchange ask(ChatClient& client, const std::string& rendered, double temperature, const AttackCatalog& catalog,
             const LlmOptions& options, long long sid, PredictionSet& out, bool tolerate_failure) {
  ChatRequest req{{{"user", rendered}}, temperature};
  ++out.requests;
  try {
    auto reply = send_with_retry(client, req, options.retry, sid, out.retries).text;
    auto parsed = parse_techniques(reply, catalog);
    for (const auto& u : parsed.unknown) out.diagnostics.push_back("dropped id not in catalog: " + u);
    return {std::move(parsed), std::move(reply)};
  } catch (const LabelingError& e) {
    if (!tolerate_failure) throw;
    out.diagnostics.push_back(e.what());
    return {};
  }
}

}  // namespace

PredictionSet label_with_llm(ChatClient& client, const PromptConfig& config, const SnortRule& rule,
                             const AttackCatalog& catalog, std::span<const IclExample> examples,
                             const LlmOptions& options) {
  const auto& tmpl = options.tmpl ? *options.tmpl : PromptTemplate::builtin();
  const auto prompt = build_prompt(config, rule, catalog, examples, tmpl);
  PredictionSet out;
  auto ex = ask(client, prompt.rendered, config.temperature, catalog, options, sid_of(rule), out, false);
  out.technique_ids = ex.parsed->ids;
  out.explanation = explanation_of(ex.reply);
  out.raw_response = std::move(ex.reply);
  return out;
}

PredictionSet competition_label(ChatClient& client, const PromptConfig& config, const SnortRule& rule,
                                const AttackCatalog& catalog, std::span<const IclExample> examples,
                                const LlmOptions& options) {
  if (!config.competition) throw ValidationError("competition_label needs a competition configuration");
  const auto& tmpl = options.tmpl ? *options.tmpl : PromptTemplate::builtin();
  const auto& cq = *config.competition;
  const auto active = catalog.active_entries();
  const auto batches = partition_batches(active, cq.batch_count);
  const auto sid = sid_of(rule);

  PredictionSet out;
  auto log_reply = [&](const std::string& stage, const std::string& reply) {
    if (!out.raw_response.empty()) out.raw_response += "\n";
    out.raw_response += "[" + stage + "]\n" + reply + "\n";
  };

  TechniqueSet selected;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const auto prompt = build_prompt(config, rule, catalog, examples, tmpl, std::span<const TechniqueEntry>(batches[b]));
    auto ex = ask(client, prompt.rendered, config.temperature, catalog, options, sid, out, true);
    if (!ex.parsed) {
      out.diagnostics.push_back("batch " + std::to_string(b + 1) + " contributed no techniques");
      continue;
    }
    log_reply("batch " + std::to_string(b + 1), ex.reply);
    selected.insert(ex.parsed->ids.begin(), ex.parsed->ids.end());
  }

  std::string last_reply;
  for (std::size_t round = 1; round <= cq.rounds && !selected.empty(); ++round) {
    std::vector<TechniqueEntry> pool;
    for (const auto& id : selected) pool.push_back(catalog.at(id));
    const auto prompt = build_prompt(config, rule, catalog, examples, tmpl, std::span<const TechniqueEntry>(pool));
    auto ex = ask(client, prompt.rendered, config.temperature, catalog, options, sid, out, true);
    if (!ex.parsed) {
      out.diagnostics.push_back("refinement round " + std::to_string(round) + " failed; pool kept");
      continue;
    }
    log_reply("refinement " + std::to_string(round), ex.reply);
    TechniqueSet refined;
    for (const auto& id : ex.parsed->ids) {
      if (selected.count(id))
        refined.insert(id);
      else
        out.diagnostics.push_back("refinement round " + std::to_string(round) + " discarded " + id.str() +
                                  " (outside pool)");
    }
    selected = std::move(refined);
    last_reply = std::move(ex.reply);
  }
  out.technique_ids = std::move(selected);
  if (!last_reply.empty()) out.explanation = explanation_of(last_reply);
  return out;
}

PredictionSet label_rule(ChatClient& client, const PromptConfig& config, const SnortRule& rule,
                         const AttackCatalog& catalog, std::span<const IclExample> examples,
                         const LlmOptions& options) {
  if (config.competition) return competition_label(client, config, rule, catalog, examples, options);
  return label_with_llm(client, config, rule, catalog, examples, options);
}

std::vector<IclExample> select_icl_examples(const LabeledDataset& train, std::size_t count) {
  auto freq = label_frequencies(train);
  std::vector<std::pair<TechniqueId, std::size_t>> order(freq.begin(), freq.end());
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<IclExample> out;
  std::set<std::uint64_t> taken;
  for (const auto& [tech, n] : order) {
    if (out.size() >= count) break;
    for (const auto& r : train.rules()) {
      if (taken.count(r.sid) || !r.technique_ids.count(tech)) continue;
      taken.insert(r.sid);
      out.push_back({serialize_rule(r.rule), r.technique_ids});
      break;
    }
  }
  return out;
}

}  // namespace nidslabel
