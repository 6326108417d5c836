#include "nidslabel/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "nidslabel/error.hpp"

namespace nidslabel {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

// Strips a trailing comment outside of quotes.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && quoted) {
      ++i;
    } else if (line[i] == '"') {
      quoted = !quoted;
    } else if (line[i] == '#' && !quoted) {
      return line.substr(0, i);
    }
  }
  return line;
}

KeyValueDoc::Value parse_value(std::string_view raw, std::size_t line_no) {
  if (raw.empty()) throw ParseError("missing value", line_no);
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') throw ParseError("unterminated string", line_no);
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      char c = raw[i];
      if (c == '\\') {
        if (i + 2 >= raw.size()) throw ParseError("dangling escape", line_no);
        c = raw[++i];
        switch (c) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': case '\\': out += c; break;
          default: throw ParseError(std::string("unsupported escape \\") + c, line_no);
        }
      } else if (c == '"') {
        throw ParseError("unexpected quote inside string", line_no);
      } else {
        out += c;
      }
    }
    return out;
  }
  if (raw == "true") return true;
  if (raw == "false") return false;
  std::int64_t i = 0;
  auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), i);
  if (ec == std::errc() && p == raw.data() + raw.size()) return i;
  double d = 0;
  auto [p2, ec2] = std::from_chars(raw.data(), raw.data() + raw.size(), d);
  if (ec2 == std::errc() && p2 == raw.data() + raw.size()) return d;
  throw ParseError("cannot parse value '" + std::string(raw) + "'", line_no);
}

}  // namespace

KeyValueDoc KeyValueDoc::parse(std::string_view text) {
  KeyValueDoc doc;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw_line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto line = trim(strip_comment(raw_line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("malformed section header", line_no);
      const auto name = trim(line.substr(1, line.size() - 2));
      if (!valid_key(name)) throw ParseError("invalid section name", line_no);
      section = std::string(name);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", line_no);
    const auto key = trim(line.substr(0, eq));
    if (!valid_key(key)) throw ParseError("invalid key '" + std::string(key) + "'", line_no);
    const auto full = section.empty() ? std::string(key) : section + "." + std::string(key);
    if (doc.values_.count(full)) throw ParseError("duplicate key '" + full + "'", line_no);
    doc.values_[full] = parse_value(trim(line.substr(eq + 1)), line_no);
  }
  return doc;
}

KeyValueDoc KeyValueDoc::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const ParseError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::optional<std::string> KeyValueDoc::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  if (auto* s = std::get_if<std::string>(&it->second)) return *s;
  throw ValidationError("config key '" + key + "' must be a string");
}

std::optional<bool> KeyValueDoc::get_bool(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  if (auto* b = std::get_if<bool>(&it->second)) return *b;
  throw ValidationError("config key '" + key + "' must be a boolean");
}

std::optional<std::int64_t> KeyValueDoc::get_int(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  if (auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
  throw ValidationError("config key '" + key + "' must be an integer");
}

std::optional<double> KeyValueDoc::get_double(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  if (auto* d = std::get_if<double>(&it->second)) return *d;
  if (auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
  throw ValidationError("config key '" + key + "' must be a number");
}

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "catalog.path",
      "data.rules", "data.labels", "data.dataset",
      "split.train_frac", "split.min_count", "split.seed",
      "classifier.model", "classifier.threshold", "classifier.seed", "classifier.ngram_max", "classifier.vocab_cap",
      "classifier.c", "classifier.epochs",
      "classifier.trees", "classifier.max_depth", "classifier.min_leaf", "classifier.max_features",
      "classifier.bootstrap",
      "classifier.rounds", "classifier.learning_rate", "classifier.stump_depth",
      "prompt.name", "prompt.technique_guide", "prompt.icl_count", "prompt.competition", "prompt.batch_count",
      "prompt.rounds", "prompt.temperature", "prompt.template", "prompt.max_retries", "prompt.backoff_ms",
      "provider.name", "provider.endpoint", "provider.model", "provider.max_in_flight", "provider.min_interval_ms",
      "provider.timeout_s",
      "output.dir",
  };
  return keys;
}

template <class T>
T non_negative(const KeyValueDoc& doc, const std::string& key, T fallback) {
  const auto v = doc.get_int(key);
  if (!v) return fallback;
  if (*v < 0) throw ValidationError("config key '" + key + "' must be >= 0");
  return static_cast<T>(*v);
}

int as_int(const KeyValueDoc& doc, const std::string& key, int fallback) {
  const auto v = doc.get_int(key);
  return v ? static_cast<int>(*v) : fallback;
}

}  // namespace

AppConfig app_config_from(const KeyValueDoc& doc, const std::filesystem::path& base_dir) {
  for (const auto& [key, _] : doc.values())
    if (!known_keys().count(key)) throw ValidationError("unknown config key '" + key + "'");

  auto path_of = [&](const std::string& key) -> std::optional<std::filesystem::path> {
    auto s = doc.get_string(key);
    if (!s) return std::nullopt;
    std::filesystem::path p(*s);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };

  AppConfig cfg;
  cfg.catalog_path = path_of("catalog.path");
  cfg.rules_path = path_of("data.rules");
  cfg.labels_path = path_of("data.labels");
  cfg.dataset_path = path_of("data.dataset");
  if (auto out = path_of("output.dir")) cfg.output_dir = *out;

  cfg.split.train_frac = doc.get_double("split.train_frac").value_or(cfg.split.train_frac);
  cfg.split.min_count = non_negative<std::size_t>(doc, "split.min_count", cfg.split.min_count);
  cfg.split.seed = non_negative<std::uint64_t>(doc, "split.seed", cfg.split.seed);

  auto& hp = cfg.hyperparams;
  if (auto m = doc.get_string("classifier.model")) hp.model_type = parse_model_type(*m);
  if (auto t = doc.get_string("classifier.threshold")) cfg.threshold_policy = parse_threshold_policy(*t);
  hp.seed = non_negative<std::uint64_t>(doc, "classifier.seed", hp.seed);
  cfg.tokenizer.ngram_max = non_negative<std::size_t>(doc, "classifier.ngram_max", cfg.tokenizer.ngram_max);
  cfg.tokenizer.vocab_cap = non_negative<std::size_t>(doc, "classifier.vocab_cap", cfg.tokenizer.vocab_cap);
  hp.svm.c = doc.get_double("classifier.c").value_or(hp.svm.c);
  hp.svm.epochs = as_int(doc, "classifier.epochs", hp.svm.epochs);
  hp.rf.trees = as_int(doc, "classifier.trees", hp.rf.trees);
  hp.rf.max_depth = as_int(doc, "classifier.max_depth", hp.rf.max_depth);
  hp.rf.min_leaf = as_int(doc, "classifier.min_leaf", hp.rf.min_leaf);
  hp.rf.max_features = as_int(doc, "classifier.max_features", hp.rf.max_features);
  hp.rf.bootstrap = doc.get_bool("classifier.bootstrap").value_or(hp.rf.bootstrap);
  hp.gbm.rounds = as_int(doc, "classifier.rounds", hp.gbm.rounds);
  hp.gbm.learning_rate = doc.get_double("classifier.learning_rate").value_or(hp.gbm.learning_rate);
  hp.gbm.stump_depth = as_int(doc, "classifier.stump_depth", hp.gbm.stump_depth);
  hp.validate();

  auto& pc = cfg.prompt;
  pc.name = doc.get_string("prompt.name").value_or("");
  pc.use_technique_guide = doc.get_bool("prompt.technique_guide").value_or(pc.use_technique_guide);
  pc.icl_count = as_int(doc, "prompt.icl_count", pc.icl_count);
  pc.temperature = doc.get_double("prompt.temperature").value_or(pc.temperature);
  if (doc.get_bool("prompt.competition").value_or(false)) {
    CompetitionConfig cc;
    cc.batch_count = non_negative<std::size_t>(doc, "prompt.batch_count", cc.batch_count);
    cc.rounds = non_negative<std::size_t>(doc, "prompt.rounds", cc.rounds);
    pc.competition = cc;
  } else if (doc.contains("prompt.batch_count") || doc.contains("prompt.rounds")) {
    throw ValidationError("prompt.batch_count and prompt.rounds need prompt.competition = true");
  }
  pc.validate();
  cfg.template_path = path_of("prompt.template");
  cfg.retry.max_retries = non_negative<std::size_t>(doc, "prompt.max_retries", cfg.retry.max_retries);
  cfg.retry.base_backoff =
      std::chrono::milliseconds(non_negative<std::int64_t>(doc, "prompt.backoff_ms", cfg.retry.base_backoff.count()));

  auto& pv = cfg.provider;
  pv.name = doc.get_string("provider.name").value_or(pv.name);
  pv.endpoint = doc.get_string("provider.endpoint").value_or(pv.endpoint);
  pv.model = doc.get_string("provider.model").value_or(pv.model);
  pv.max_in_flight = non_negative<std::size_t>(doc, "provider.max_in_flight", pv.max_in_flight);
  pv.min_interval =
      std::chrono::milliseconds(non_negative<std::int64_t>(doc, "provider.min_interval_ms", pv.min_interval.count()));
  pv.timeout = std::chrono::seconds(non_negative<std::int64_t>(doc, "provider.timeout_s", pv.timeout.count()));
  return cfg;
}

AppConfig load_app_config(const std::filesystem::path& path) {
  const auto doc = KeyValueDoc::load(path);
  return app_config_from(doc, path.parent_path());
}

}  // namespace nidslabel
