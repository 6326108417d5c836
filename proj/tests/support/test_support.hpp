#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "nidslabel/attack_catalog.hpp"
#include "nidslabel/dataset.hpp"
#include "nidslabel/snort_rule.hpp"

namespace testing {

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(NIDSLABEL_SOURCE_DIR) / rel;
}

inline std::filesystem::path catalog_path() { return source_path("data/catalog/enterprise-attack-15.1-subset.json"); }

inline const nidslabel::AttackCatalog& fixture_catalog() {
  static const auto catalog = nidslabel::load_catalog(catalog_path());
  return catalog;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

inline nidslabel::TechniqueSet ids(std::initializer_list<const char*> list) {
  nidslabel::TechniqueSet out;
  for (const char* s : list) out.insert(nidslabel::TechniqueId(s));
  return out;
}

inline nidslabel::SnortRule rule_with(std::uint64_t sid, const std::string& body = "") {
  return nidslabel::parse_rule("alert tcp $EXTERNAL_NET any -> $HOME_NET any (msg:\"rule " + std::to_string(sid) +
                               "\"; " + body + " sid:" + std::to_string(sid) + "; rev:1;)");
}

inline nidslabel::LabeledDataset make_dataset(
    const std::vector<std::pair<std::uint64_t, std::vector<std::string>>>& rows) {
  std::vector<nidslabel::LabeledRule> rules;
  for (const auto& [sid, labels] : rows) {
    nidslabel::TechniqueSet set;
    for (const auto& l : labels) set.insert(nidslabel::TechniqueId(l));
    rules.push_back({sid, rule_with(sid), std::move(set)});
  }
  return nidslabel::LabeledDataset(std::move(rules));
}

// Random multi-label dataset over `labels` with 1..max_labels labels per rule.
inline nidslabel::LabeledDataset random_dataset(std::mt19937_64& gen, std::size_t n_rules,
                                                const std::vector<std::string>& labels, std::size_t max_labels = 3,
                                                std::uint64_t first_sid = 1) {
  std::vector<std::pair<std::uint64_t, std::vector<std::string>>> rows;
  for (std::size_t i = 0; i < n_rules; ++i) {
    const auto k = 1 + gen() % std::min(max_labels, labels.size());
    std::vector<std::string> picked;
    while (picked.size() < k) {
      const auto& l = labels[gen() % labels.size()];
      if (std::find(picked.begin(), picked.end(), l) == picked.end()) picked.push_back(l);
    }
    rows.emplace_back(first_sid + i, picked);
  }
  return make_dataset(rows);
}

// Separable corpus: every label owns three signature words, each rule carries
// the signature words of its 1-2 labels plus random noise words.
inline nidslabel::LabeledDataset synthetic_dataset(std::mt19937_64& gen, std::size_t n_rules,
                                                   const std::vector<std::string>& labels,
                                                   std::uint64_t first_sid = 1) {
  std::vector<nidslabel::LabeledRule> rules;
  for (std::size_t i = 0; i < n_rules; ++i) {
    std::vector<std::size_t> picked{i % labels.size()};
    if (gen() % 3 == 0) {
      const auto extra = gen() % labels.size();
      if (extra != picked[0]) picked.push_back(extra);
    }
    std::string words;
    nidslabel::TechniqueSet set;
    for (auto l : picked) {
      set.insert(nidslabel::TechniqueId(labels[l]));
      for (int j = 0; j < 3; ++j) words += "sig" + std::to_string(l) + "w" + std::to_string(j) + " ";
    }
    for (int j = 0; j < 4; ++j) words += "noise" + std::to_string(gen() % 40) + " ";
    const auto sid = first_sid + i;
    rules.push_back({sid, rule_with(sid, "content:\"" + words + "\";"), std::move(set)});
  }
  return nidslabel::LabeledDataset(std::move(rules));
}

inline std::vector<std::string> technique_names(std::size_t n, int base = 1000) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("T" + std::to_string(base + static_cast<int>(i)));
  return out;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("nidslabel-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
