#include "nidslabel/app.hpp"

#include <cstdlib>
#include <deque>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "nidslabel/baselines.hpp"
#include "nidslabel/classifiers.hpp"
#include "nidslabel/config.hpp"
#include "nidslabel/dataset.hpp"
#include "nidslabel/error.hpp"
#include "nidslabel/evaluation.hpp"
#include "nidslabel/hashing.hpp"
#include "nidslabel/parallel.hpp"
#include "nidslabel/prompt_search.hpp"
#include "nidslabel/prompting.hpp"

namespace nidslabel {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out.flush()) throw Error("write failed for " + path.string());
}

// One JSON line appended to <out>/manifest.jsonl per run. Holds no clock
// values so reruns from the same inputs append identical lines.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> args) {
    doc_["command"] = std::move(command);
    doc_["args"] = std::move(args);
    doc_["inputs"] = json::object();
    doc_["outputs"] = json::object();
    doc_["seeds"] = json::object();
    doc_["versions"] = {{"nidslabel", kVersion}};
  }

  void input(const std::string& name, const fs::path& path) {
    if (!fs::exists(path)) throw ValidationError(name + " not found: " + path.string());
    inputs_.push_back(path);
    doc_["inputs"][name] = {{"path", path.generic_string()}, {"sha256", sha256_hex(read_file(path))}};
  }

  // Refuses to overwrite a registered input.
  void guard_output(const fs::path& path) const {
    for (const auto& in : inputs_)
      if (fs::exists(path) && fs::equivalent(in, path))
        throw ValidationError("refusing to overwrite input " + path.string());
  }

  void output(const std::string& name, const fs::path& path, const std::string& content) {
    guard_output(path);
    write_file(path, content);
    doc_["outputs"][name] = {{"path", path.generic_string()}, {"sha256", sha256_hex(content)}};
  }

  void seed(const std::string& name, std::uint64_t value) { doc_["seeds"][name] = value; }
  void version(const std::string& name, const std::string& value) { doc_["versions"][name] = value; }
  void set(const std::string& key, json value) { doc_[key] = std::move(value); }

  void append(const fs::path& dir) const {
    std::ofstream out(dir / "manifest.jsonl", std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot append to " + (dir / "manifest.jsonl").string());
    out << doc_.dump() << '\n';
  }

 private:
  json doc_;
  std::vector<fs::path> inputs_;
};

struct Common {
  std::string config;
  std::string out;
  std::string catalog;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "Key/value config file");
  sub->add_option("--out", c.out, "Output directory");
  sub->add_option("--catalog", c.catalog, "ATT&CK catalog JSON");
  sub->add_option("--seed", c.seed, "Seed for every randomized step");
  sub->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

struct Context {
  AppConfig cfg;
  fs::path out_dir;
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed;
  std::ostream& out;
  Manifest manifest;

  Context(const Common& c, std::string command, std::vector<std::string> args, std::ostream& o)
      : out(o), manifest(std::move(command), std::move(args)) {
    if (!c.config.empty()) {
      manifest.input("config", c.config);
      cfg = load_app_config(c.config);
    }
    if (!c.catalog.empty()) cfg.catalog_path = fs::path(c.catalog);
    if (!c.out.empty()) cfg.output_dir = c.out;
    out_dir = cfg.output_dir;
    jobs = c.jobs;
    seed = c.seed;
    if (seed) {
      cfg.split.seed = *seed;
      cfg.hyperparams.seed = *seed;
    }
    fs::create_directories(out_dir);
  }

  AttackCatalog catalog() {
    if (!cfg.catalog_path) throw ValidationError("no catalog: pass --catalog or set catalog.path");
    manifest.input("catalog", *cfg.catalog_path);
    auto cat = load_catalog(*cfg.catalog_path);
    manifest.version("catalog", cat.version());
    return cat;
  }

  LabeledDataset dataset(const std::string& name, const std::string& path) {
    manifest.input(name, path);
    return load_jsonl(path);
  }

  fs::path at(const std::string& file) const { return out_dir / file; }
};

// ---- predictions ----------------------------------------------------------

using PredRows = std::vector<std::pair<std::uint64_t, TechniqueSet>>;

json id_array(const TechniqueSet& ids) {
  auto a = json::array();
  for (const auto& t : ids) a.push_back(t.str());
  return a;
}

std::string predictions_jsonl(const PredRows& rows) {
  std::string out;
  for (const auto& [sid, ids] : rows) {
    json line;
    line["sid"] = sid;
    line["techniques"] = id_array(ids);
    out += line.dump() + "\n";
  }
  return out;
}

std::map<std::uint64_t, TechniqueSet> load_predictions(const fs::path& path, const AttackCatalog& catalog) {
  std::map<std::uint64_t, TechniqueSet> out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    try {
      const auto obj = json::parse(line);
      const auto sid = obj.at("sid").get<std::uint64_t>();
      TechniqueSet ids;
      for (const auto& t : obj.at("techniques")) {
        TechniqueId id(t.get<std::string>());
        if (!catalog.contains(id)) throw ValidationError("technique " + id.str() + " is not in the catalog");
        ids.insert(id);
      }
      if (!out.emplace(sid, std::move(ids)).second) throw ValidationError("duplicate sid " + std::to_string(sid));
    } catch (const json::exception& e) {
      throw ValidationError(where + "malformed prediction: " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
  return out;
}

std::string predictor_name_from(const fs::path& path) {
  auto stem = path.stem().string();
  const std::string prefix = "predictions-";
  if (stem.rfind(prefix, 0) == 0 && stem.size() > prefix.size()) stem = stem.substr(prefix.size());
  return stem;
}

// ---- commands -------------------------------------------------------------

struct IngestFlags {
  std::string rules, labels;
  bool lenient = false;
};

void cmd_ingest(Context& ctx, const IngestFlags& f) {
  const fs::path rules = f.rules.empty() ? ctx.cfg.rules_path.value_or("") : fs::path(f.rules);
  const fs::path labels = f.labels.empty() ? ctx.cfg.labels_path.value_or("") : fs::path(f.labels);
  if (rules.empty() || labels.empty()) throw ValidationError("ingest needs --rules and --labels");
  const auto catalog = ctx.catalog();
  ctx.manifest.input("rules", rules);
  ctx.manifest.input("labels", labels);
  const auto res = ingest(rules, labels, catalog, IngestOptions{!f.lenient});
  ctx.manifest.output("dataset", ctx.at("dataset.jsonl"), to_jsonl(res.dataset));
  json report;
  report["rules"] = res.dataset.size();
  report["labels"] = res.dataset.label_universe().size();
  report["unlabeled_dropped"] = res.unlabeled_dropped;
  report["rule_parse_failures"] = res.rule_parse_failures;
  report["diagnostics"] = res.diagnostics;
  ctx.manifest.output("report", ctx.at("ingest_report.json"), report.dump(2) + "\n");
  ctx.out << fmt::format("ingested {} labeled rules over {} techniques ({} unlabeled, {} unparsable, {} diagnostics)\n",
                         res.dataset.size(), res.dataset.label_universe().size(), res.unlabeled_dropped,
                         res.rule_parse_failures, res.diagnostics.size());
}

struct SplitFlags {
  std::string in;
  std::optional<std::size_t> min_count;
  std::optional<double> train_frac;
};

void cmd_split(Context& ctx, const SplitFlags& f) {
  const std::string in = f.in.empty() ? ctx.cfg.dataset_path.value_or("").string() : f.in;
  if (in.empty()) throw ValidationError("split needs --in");
  const auto ds = ctx.dataset("dataset", in);
  const auto min_count = f.min_count.value_or(ctx.cfg.split.min_count);
  const auto frac = f.train_frac.value_or(ctx.cfg.split.train_frac);
  const auto seed = ctx.cfg.split.seed;
  ctx.manifest.seed("split", seed);

  auto parts = partition_rare(ds, min_count);
  auto split = stratified_split(parts.core, frac, seed);
  ctx.manifest.output("train", ctx.at("train.jsonl"), to_jsonl(split.train, SplitTag::train));
  ctx.manifest.output("test", ctx.at("test.jsonl"), to_jsonl(split.test, SplitTag::test));
  ctx.manifest.output("rare", ctx.at("rare.jsonl"), to_jsonl(parts.rare, SplitTag::rare));

  const auto total = label_frequencies(parts.core);
  const auto train = label_frequencies(split.train);
  const auto test = label_frequencies(split.test);
  json stats;
  stats["min_count"] = min_count;
  stats["train_frac"] = frac;
  stats["seed"] = seed;
  stats["input_rules"] = ds.size();
  stats["core_rules"] = parts.core.size();
  stats["train_rules"] = split.train.size();
  stats["test_rules"] = split.test.size();
  stats["rare_rules"] = parts.rare.size();
  auto rare = json::array();
  for (const auto& t : parts.rare_techniques) rare.push_back(t.str());
  stats["rare_techniques"] = std::move(rare);
  auto per_label = json::object();
  for (const auto& [id, n] : total) {
    auto get = [&](const LabelCounts& c) { auto it = c.find(id); return it == c.end() ? std::size_t{0} : it->second; };
    per_label[id.str()] = {{"total", n}, {"train", get(train)}, {"test", get(test)}, {"train_target", frac * n}};
  }
  stats["per_label"] = std::move(per_label);
  ctx.manifest.output("stats", ctx.at("split_stats.json"), stats.dump(2) + "\n");
  ctx.out << fmt::format("core {} rules ({} train / {} test), rare {} rules over {} techniques\n", parts.core.size(),
                         split.train.size(), split.test.size(), parts.rare.size(), parts.rare_techniques.size());
}

struct TrainFlags {
  std::string train;
  std::string model;
  std::size_t tune_rounds = 0;
};

void cmd_train(Context& ctx, const TrainFlags& f) {
  if (f.train.empty()) throw ValidationError("train needs --train");
  const auto ds = ctx.dataset("train", f.train);
  auto hp = ctx.cfg.hyperparams;
  if (!f.model.empty()) hp.model_type = parse_model_type(f.model);
  hp.validate();
  ctx.manifest.seed("classifier", hp.seed);
  TrainOptions opts{ctx.cfg.tokenizer, ctx.cfg.threshold_policy, ctx.jobs};

  json report;
  if (f.tune_rounds > 0) {
    const std::vector<Hyperparams> grid{hp};
    auto result = tune(ds, grid, f.tune_rounds, hp.seed, opts);
    auto evaluated = json::array();
    for (const auto& c : result.report.evaluated)
      evaluated.push_back({{"round", c.round}, {"hyperparams", describe(c.hp)}, {"validation_f1", c.validation_f1}});
    report["tuning"] = {{"rounds", f.tune_rounds}, {"evaluated", std::move(evaluated)},
                        {"best", describe(result.report.best)}, {"best_f1", result.report.best_f1}};
    hp = result.report.best;
    ctx.manifest.output("model", ctx.at("model.json"), result.model.to_json());
    report["labels"] = result.model.label_universe().size();
    report["vocabulary"] = result.model.tfidf().vocabulary_size();
  } else {
    const auto model = train_multilabel(ds, hp, opts);
    ctx.manifest.output("model", ctx.at("model.json"), model.to_json());
    report["labels"] = model.label_universe().size();
    report["vocabulary"] = model.tfidf().vocabulary_size();
  }
  report["hyperparams"] = describe(hp);
  report["train_rules"] = ds.size();
  ctx.manifest.output("report", ctx.at("train_report.json"), report.dump(2) + "\n");
  ctx.out << fmt::format("trained {} on {} rules: {}\n", to_string(hp.model_type), ds.size(), describe(hp));
}

struct PredictFlags {
  std::string model, in, name;
};

void cmd_predict(Context& ctx, const PredictFlags& f) {
  if (f.model.empty() || f.in.empty()) throw ValidationError("predict needs --model and --in");
  ctx.manifest.input("model", f.model);
  const auto model = MultiLabelClassifier::load(f.model);
  const auto ds = ctx.dataset("in", f.in);
  PredRows rows(ds.size());
  parallel_for(ds.size(), ctx.jobs, [&](std::size_t i) {
    const auto& r = ds.rules()[i];
    rows[i] = {r.sid, model.predict(r.rule).techniques};
  });
  std::string name = f.name;
  if (name.empty()) {
    const auto t = model.hyperparams().model_type;
    name = t == ModelType::svm ? "SVM" : t == ModelType::random_forest ? "RF" : "GBM";
  }
  ctx.manifest.output("predictions", ctx.at("predictions-" + name + ".jsonl"), predictions_jsonl(rows));
  ctx.out << fmt::format("wrote {} predictions as {}\n", rows.size(), name);
}

struct EvaluateFlags {
  std::string gold;
  std::vector<std::string> preds;
  std::string level = "technique";
  bool per_label = false;
  bool rollup = false;
  bool strict = false;
};

void cmd_evaluate(Context& ctx, const EvaluateFlags& f) {
  if (f.gold.empty() || f.preds.empty()) throw ValidationError("evaluate needs --gold and at least one --pred");
  const auto level = parse_eval_level(f.level);
  const auto catalog = ctx.catalog();
  const auto gold = ctx.dataset("gold", f.gold);

  std::vector<ResultsRow> rows;
  std::set<std::string> names;
  for (std::size_t i = 0; i < f.preds.size(); ++i) {
    std::string name, path = f.preds[i];
    if (const auto eq = path.find('='); eq != std::string::npos) {
      name = path.substr(0, eq);
      path = path.substr(eq + 1);
    } else {
      name = predictor_name_from(path);
    }
    if (name.empty() || !names.insert(name).second) throw ValidationError("duplicate or empty predictor name '" + name + "'");
    ctx.manifest.input("pred:" + name, path);
    const auto preds = load_predictions(path, catalog);

    const EvalOptions tech{EvalLevel::technique, f.rollup, f.strict};
    const EvalOptions tac{EvalLevel::tactic, false, f.strict};
    const auto tech_report = evaluate_predictions(gold, preds, catalog, tech);
    const auto tac_report = evaluate_predictions(gold, preds, catalog, tac);
    const auto& chosen = level == EvalLevel::tactic ? tac_report : tech_report;
    ctx.manifest.output("report:" + name, ctx.at("evaluation-" + name + ".json"), report_to_json(chosen, f.per_label));
    if (f.per_label) ctx.out << name << "\n" << report_to_table(chosen, true);

    ResultsRow row{name, tech_report.metrics, tac_report.metrics};
    // RT-k draws from the gold tactics, so its tactic score says nothing.
    if (name.rfind("RT-", 0) == 0) row.tactic.reset();
    rows.push_back(std::move(row));
  }
  const auto text = results_table_text(rows);
  ctx.manifest.output("results_text", ctx.at("results.txt"), text);
  ctx.manifest.output("results_json", ctx.at("results.json"), results_table_json(rows));
  ctx.out << text;
}

struct BaselineFlags {
  std::string train, test;
  std::string kind = "all";
  std::vector<std::size_t> ks{1, 2};
};

void cmd_baseline(Context& ctx, const BaselineFlags& f) {
  if (f.kind != "all" && f.kind != "top" && f.kind != "rt") throw ValidationError("--kind must be top, rt or all");
  if (f.test.empty()) throw ValidationError("baseline needs --test");
  const bool top = f.kind != "rt", rt = f.kind != "top";
  if (top && f.train.empty()) throw ValidationError("top-k baselines need --train");
  const auto catalog = ctx.catalog();
  const auto test = ctx.dataset("test", f.test);
  LabeledDataset train;
  if (top) train = ctx.dataset("train", f.train);
  const auto seed = ctx.seed.value_or(ctx.cfg.split.seed);
  if (rt) ctx.manifest.seed("baseline", seed);

  std::vector<BaselinePredictor> predictors;
  for (auto k : f.ks)
    if (top) predictors.push_back(fit_top_k(train, k));
  for (auto k : f.ks)
    if (rt) predictors.push_back(make_random_within_tactic(k, seed));
  for (const auto& p : predictors) {
    PredRows rows;
    for (const auto& r : test.rules()) rows.emplace_back(r.sid, p.predict(r, catalog));
    ctx.manifest.output(p.name(), ctx.at("predictions-" + p.name() + ".jsonl"), predictions_jsonl(rows));
    ctx.out << fmt::format("wrote {} predictions as {}\n", rows.size(), p.name());
  }
}

struct LlmFlags {
  std::string mock;
  bool strict_transcript = false;
  std::string provider, endpoint, llm_model, record;
  std::string examples;
};

void add_llm_flags(CLI::App* sub, LlmFlags& f) {
  sub->add_option("--mock", f.mock, "Replay replies from a JSONL transcript");
  sub->add_flag("--strict-transcript", f.strict_transcript, "Check transcript prompt fingerprints");
  sub->add_option("--provider", f.provider, "Chat provider (openai)");
  sub->add_option("--endpoint", f.endpoint, "Chat completion URL");
  sub->add_option("--llm-model", f.llm_model, "Provider model name");
  sub->add_option("--record", f.record, "Write a replayable transcript of every exchange");
  sub->add_option("--examples", f.examples, "Labeled JSONL pool for in-context examples");
}

struct ClientHandle {
  std::unique_ptr<ChatClient> base;
  std::unique_ptr<RecordingClient> recorder;
  bool scripted = false;
  ChatClient& get() { return recorder ? static_cast<ChatClient&>(*recorder) : *base; }
};

ClientHandle make_client(Context& ctx, const LlmFlags& f) {
  ClientHandle h;
  if (!f.mock.empty()) {
    ctx.manifest.input("transcript", f.mock);
    h.base = scripted_client(f.mock, f.strict_transcript);
    h.scripted = true;
  } else {
    const auto provider = f.provider.empty() ? ctx.cfg.provider.name : f.provider;
    if (provider != "openai") throw ValidationError("unknown provider '" + provider + "' (supported: openai)");
    HttpChatClient::Options o;
    o.endpoint = f.endpoint.empty() ? ctx.cfg.provider.endpoint : f.endpoint;
    o.model = f.llm_model.empty() ? ctx.cfg.provider.model : f.llm_model;
    if (o.endpoint.empty()) throw ValidationError("no endpoint: pass --endpoint or set provider.endpoint");
    if (const char* key = std::getenv("LLM_API_KEY")) o.api_key = key;
    o.max_in_flight = ctx.cfg.provider.max_in_flight;
    o.min_interval = ctx.cfg.provider.min_interval;
    o.timeout = ctx.cfg.provider.timeout;
    ctx.manifest.set("provider", {{"name", provider}, {"endpoint", o.endpoint}, {"model", o.model}});
    h.base = std::make_unique<HttpChatClient>(std::move(o));
  }
  if (!f.record.empty()) {
    h.recorder = std::make_unique<RecordingClient>(*h.base, f.record);
  }
  return h;
}

std::vector<IclExample> icl_pool(Context& ctx, const LlmFlags& f, int needed) {
  if (needed <= 0) return {};
  if (f.examples.empty()) throw ValidationError("in-context examples need --examples <labeled jsonl>");
  const auto train = ctx.dataset("examples", f.examples);
  return select_icl_examples(train, static_cast<std::size_t>(needed));
}

struct LabelFlags {
  std::string in, name;
  bool strict = false;
};

void cmd_llm_label(Context& ctx, const LabelFlags& lf, const LlmFlags& f) {
  if (lf.in.empty()) throw ValidationError("llm-label needs --in");
  const auto catalog = ctx.catalog();
  const auto ds = ctx.dataset("in", lf.in);
  const auto config = ctx.cfg.prompt;
  std::optional<PromptTemplate> tmpl;
  if (ctx.cfg.template_path) {
    ctx.manifest.input("template", *ctx.cfg.template_path);
    tmpl = PromptTemplate::load(*ctx.cfg.template_path);
  }
  const auto examples = icl_pool(ctx, f, config.icl_count);
  auto client = make_client(ctx, f);
  LlmOptions opts{tmpl ? &*tmpl : nullptr, ctx.cfg.retry};

  std::vector<PredictionSet> results(ds.size());
  std::vector<std::optional<std::string>> errors(ds.size());
  // Replayed transcripts are matched by request order, so stay sequential.
  const auto jobs = client.scripted || client.recorder ? 1 : ctx.jobs;
  parallel_for(ds.size(), jobs, [&](std::size_t i) {
    try {
      results[i] = label_rule(client.get(), config, ds.rules()[i].rule, catalog, examples, opts);
    } catch (const LabelingError& e) {
      if (lf.strict) throw;
      errors[i] = e.what();
    }
  });

  PredRows rows;
  std::string details;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto sid = ds.rules()[i].sid;
    rows.emplace_back(sid, results[i].technique_ids);
    json d;
    d["sid"] = sid;
    d["techniques"] = id_array(results[i].technique_ids);
    d["requests"] = results[i].requests;
    d["retries"] = results[i].retries;
    d["diagnostics"] = results[i].diagnostics;
    if (results[i].explanation) d["explanation"] = *results[i].explanation;
    d["raw_response"] = results[i].raw_response;
    if (errors[i]) {
      d["error"] = *errors[i];
      ++failed;
    }
    details += d.dump() + "\n";
  }
  const auto name = lf.name.empty() ? config.display_name() : lf.name;
  ctx.manifest.set("prompt", name);
  ctx.manifest.output("predictions", ctx.at("predictions-" + name + ".jsonl"), predictions_jsonl(rows));
  ctx.manifest.output("details", ctx.at("llm-details-" + name + ".jsonl"), details);
  if (!f.record.empty()) ctx.manifest.set("transcript_out", fs::path(f.record).generic_string());
  ctx.out << fmt::format("labeled {} rules with {} ({} failed)\n", ds.size(), name, failed);
}

struct SearchFlags {
  std::string dev;
  std::vector<std::string> candidates;
};

void cmd_prompt_search(Context& ctx, const SearchFlags& sf, const LlmFlags& f) {
  if (sf.dev.empty() || sf.candidates.empty()) throw ValidationError("prompt-search needs --dev and --candidate");
  const auto catalog = ctx.catalog();
  const auto dev = ctx.dataset("dev", sf.dev);
  std::vector<PromptConfig> configs;
  int needed = 0;
  for (std::size_t i = 0; i < sf.candidates.size(); ++i) {
    ctx.manifest.input("candidate" + std::to_string(i + 1), sf.candidates[i]);
    auto pc = load_app_config(sf.candidates[i]).prompt;
    needed = std::max(needed, pc.icl_count);
    configs.push_back(std::move(pc));
  }
  std::optional<PromptTemplate> tmpl;
  if (ctx.cfg.template_path) {
    ctx.manifest.input("template", *ctx.cfg.template_path);
    tmpl = PromptTemplate::load(*ctx.cfg.template_path);
  }
  const auto examples = icl_pool(ctx, f, needed);
  auto client = make_client(ctx, f);
  const auto result =
      select_best_prompt(configs, dev, client.get(), catalog, examples, LlmOptions{tmpl ? &*tmpl : nullptr, ctx.cfg.retry});

  json doc;
  auto ranked = json::array();
  for (std::size_t i = 0; i < result.ranked.size(); ++i) {
    const auto& c = result.ranked[i];
    ranked.push_back({{"rank", i + 1},
                      {"name", c.config.display_name()},
                      {"candidate", fs::path(sf.candidates[c.input_index]).generic_string()},
                      {"precision", c.report.metrics.precision},
                      {"recall", c.report.metrics.recall},
                      {"f1", c.report.metrics.f1},
                      {"prompt_tokens", c.prompt_tokens},
                      {"failures", c.report.failures}});
    ctx.out << fmt::format("{:>2}. {:<14} F1 {:.4f}  tokens {}\n", i + 1, c.config.display_name(),
                           c.report.metrics.f1, c.prompt_tokens);
  }
  doc["best"] = result.best.display_name();
  doc["ranked"] = std::move(ranked);
  ctx.manifest.output("ranking", ctx.at("prompt_search.json"), doc.dump(2) + "\n");
}

void cmd_catalog_check(Context& ctx) {
  const auto catalog = ctx.catalog();
  std::size_t subs = 0, deprecated = 0;
  for (const auto& e : catalog.sorted_entries()) {
    subs += e.is_sub();
    deprecated += e.deprecated;
  }
  ctx.out << fmt::format("catalog {}: {} techniques ({} sub-techniques, {} deprecated), {} tactics\n",
                         catalog.version(), catalog.size(), subs, deprecated, catalog.tactic_universe().size());
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Label Snort rules with MITRE ATT&CK techniques", "nidslabel"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::deque<std::pair<CLI::App*, Common>> commons;
  auto sub = [&](CLI::App* parent, const char* name, const char* desc) {
    auto* s = parent->add_subcommand(name, desc);
    commons.emplace_back(s, Common{});
    add_common(s, commons.back().second);
    return s;
  };

  IngestFlags ingest_f;
  auto* ingest_cmd = sub(&app, "ingest", "Join a rules file with a sid,technique_id label map");
  ingest_cmd->add_option("--rules", ingest_f.rules, "Snort rules file");
  ingest_cmd->add_option("--labels", ingest_f.labels, "CSV label map");
  ingest_cmd->add_flag("--lenient", ingest_f.lenient, "Record bad label rows as diagnostics");

  SplitFlags split_f;
  auto* split_cmd = sub(&app, "split", "Rare-technique partition and stratified train/test split");
  split_cmd->add_option("--in", split_f.in, "Labeled JSONL dataset");
  split_cmd->add_option("--min-count", split_f.min_count, "Minimum rules per frequent technique");
  split_cmd->add_option("--train-frac", split_f.train_frac, "Train share");

  TrainFlags train_f;
  auto* train_cmd = sub(&app, "train", "Train a one-vs-rest classifier");
  train_cmd->add_option("--train", train_f.train, "Training JSONL");
  train_cmd->add_option("--model", train_f.model, "svm, rf or gbm");
  train_cmd->add_option("--tune-rounds", train_f.tune_rounds, "Hyperparameter search rounds (0 = off)");

  PredictFlags predict_f;
  auto* predict_cmd = sub(&app, "predict", "Predict techniques with a trained model");
  predict_cmd->add_option("--model", predict_f.model, "Model JSON");
  predict_cmd->add_option("--in", predict_f.in, "Rules JSONL");
  predict_cmd->add_option("--name", predict_f.name, "Predictor name for the output file");

  EvaluateFlags eval_f;
  auto* eval_cmd = sub(&app, "evaluate", "Score prediction files against gold labels");
  eval_cmd->add_option("--gold", eval_f.gold, "Gold JSONL");
  eval_cmd->add_option("--pred", eval_f.preds, "Predictions JSONL, optionally NAME=PATH");
  eval_cmd->add_option("--level", eval_f.level, "technique or tactic");
  eval_cmd->add_flag("--per-label", eval_f.per_label, "Include per-label counts");
  eval_cmd->add_flag("--rollup", eval_f.rollup, "Score sub-techniques as their parents");
  eval_cmd->add_flag("--strict", eval_f.strict, "Abort on the first predictor failure");

  BaselineFlags base_f;
  auto* base_cmd = sub(&app, "baseline", "Top-k and random-within-tactic baselines");
  base_cmd->add_option("--train", base_f.train, "Training JSONL");
  base_cmd->add_option("--test", base_f.test, "Test JSONL");
  base_cmd->add_option("--kind", base_f.kind, "top, rt or all");
  base_cmd->add_option("--k", base_f.ks, "Values of k");

  LabelFlags label_f;
  LlmFlags label_llm;
  auto* label_cmd = sub(&app, "llm-label", "Label rules through a chat model");
  label_cmd->add_option("--in", label_f.in, "Rules JSONL");
  label_cmd->add_option("--name", label_f.name, "Predictor name for the output file");
  label_cmd->add_flag("--strict", label_f.strict, "Abort when a rule cannot be labeled");
  add_llm_flags(label_cmd, label_llm);

  SearchFlags search_f;
  LlmFlags search_llm;
  auto* search_cmd = sub(&app, "prompt-search", "Rank prompt configurations on a dev set");
  search_cmd->add_option("--dev", search_f.dev, "Dev JSONL");
  search_cmd->add_option("--candidate", search_f.candidates, "Config file holding one prompt configuration");
  add_llm_flags(search_cmd, search_llm);

  auto* catalog_cmd = app.add_subcommand("catalog", "Catalog utilities");
  catalog_cmd->require_subcommand(1);
  auto* check_cmd = sub(catalog_cmd, "check", "Validate a catalog file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);

  try {
    for (auto& [cmd, common] : commons) {
      if (!cmd->parsed()) continue;
      const std::string name = cmd == check_cmd ? "catalog check" : cmd->get_name();
      Context ctx(common, name, args, out);
      if (cmd == ingest_cmd) cmd_ingest(ctx, ingest_f);
      else if (cmd == split_cmd) cmd_split(ctx, split_f);
      else if (cmd == train_cmd) cmd_train(ctx, train_f);
      else if (cmd == predict_cmd) cmd_predict(ctx, predict_f);
      else if (cmd == eval_cmd) cmd_evaluate(ctx, eval_f);
      else if (cmd == base_cmd) cmd_baseline(ctx, base_f);
      else if (cmd == label_cmd) cmd_llm_label(ctx, label_f, label_llm);
      else if (cmd == search_cmd) cmd_prompt_search(ctx, search_f, search_llm);
      else if (cmd == check_cmd) cmd_catalog_check(ctx);
      ctx.manifest.append(ctx.out_dir);
      return 0;
    }
    err << "no command given\n" << app.help();
    return 1;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace nidslabel
