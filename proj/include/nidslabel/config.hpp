#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "nidslabel/classifiers.hpp"
#include "nidslabel/prompting.hpp"

namespace nidslabel {

// Flat key/value document in a small TOML subset: `[section]` headers,
// `key = value` lines with quoted strings, integers, floats and booleans,
// `#` comments. Keys are addressed as "section.key".
class KeyValueDoc {
 public:
  using Value = std::variant<bool, std::int64_t, double, std::string>;

  static KeyValueDoc parse(std::string_view text);
  static KeyValueDoc load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, Value>& values() const noexcept { return values_; }
  void set(const std::string& key, Value v) { values_[key] = std::move(v); }

  std::optional<std::string> get_string(const std::string& key) const;
  std::optional<bool> get_bool(const std::string& key) const;
  std::optional<std::int64_t> get_int(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;  // integers widen

 private:
  std::map<std::string, Value> values_;
};

struct ProviderSettings {
  std::string name = "openai";  // chat-completion compatible HTTP API
  std::string endpoint;
  std::string model;
  std::size_t max_in_flight = 4;
  std::chrono::milliseconds min_interval{0};
  std::chrono::seconds timeout{120};
};

struct SplitSettings {
  double train_frac = 0.8;
  std::size_t min_count = 5;
  std::uint64_t seed = 0;
};

struct AppConfig {
  std::optional<std::filesystem::path> catalog_path;
  std::optional<std::filesystem::path> rules_path;
  std::optional<std::filesystem::path> labels_path;
  std::optional<std::filesystem::path> dataset_path;
  SplitSettings split;
  Hyperparams hyperparams;
  ThresholdPolicy threshold_policy = ThresholdPolicy::positive_margin;
  TokenizerConfig tokenizer;
  PromptConfig prompt;
  std::optional<std::filesystem::path> template_path;
  RetryPolicy retry;
  ProviderSettings provider;
  std::filesystem::path output_dir = "out";
};

// Unknown keys and mistyped values are ValidationErrors. Relative paths are
// resolved against `base_dir`.
AppConfig app_config_from(const KeyValueDoc& doc, const std::filesystem::path& base_dir = {});
AppConfig load_app_config(const std::filesystem::path& path);

}  // namespace nidslabel
