#include "nidslabel/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "nidslabel/error.hpp"

namespace nidslabel {

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config) {
  std::vector<std::string> unigrams;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    const bool numeric = std::all_of(cur.begin(), cur.end(), [](unsigned char c) { return std::isdigit(c); });
    if (cur.size() >= 2 || numeric) unigrams.push_back(cur);
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c))
      cur.push_back(static_cast<char>(std::tolower(c)));
    else
      flush();
  }
  flush();

  if (config.ngram_max <= 1) return unigrams;
  std::vector<std::string> out = unigrams;
  for (std::size_t n = 2; n <= config.ngram_max; ++n) {
    for (std::size_t i = 0; i + n <= unigrams.size(); ++i) {
      std::string gram = unigrams[i];
      for (std::size_t k = 1; k < n; ++k) gram += ' ' + unigrams[i + k];
      out.push_back(std::move(gram));
    }
  }
  return out;
}

TfidfModel::TfidfModel(TokenizerConfig config, std::vector<std::string> terms, std::vector<std::size_t> df,
                       std::size_t document_count)
    : config_(config), terms_(std::move(terms)), df_(std::move(df)), document_count_(document_count) {
  if (terms_.size() != df_.size()) throw ValidationError("tf-idf terms/df length mismatch");
  if (document_count_ == 0) throw ValidationError("tf-idf model with zero documents");
  idf_.resize(static_cast<Eigen::Index>(terms_.size()));
  const double n = static_cast<double>(document_count_);
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (i > 0 && !(terms_[i - 1] < terms_[i])) throw ValidationError("tf-idf terms not strictly sorted");
    if (df_[i] < 1 || df_[i] > document_count_) throw ValidationError("tf-idf df out of range for " + terms_[i]);
    idf_[static_cast<Eigen::Index>(i)] = std::log((1.0 + n) / (1.0 + static_cast<double>(df_[i]))) + 1.0;
    index_.emplace(terms_[i], i);
  }
}

TfidfModel TfidfModel::fit(std::span<const std::string> corpus, const TokenizerConfig& config) {
  if (corpus.empty()) throw ValidationError("cannot fit tf-idf on an empty corpus");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : corpus) {
    auto tokens = tokenize(doc, config);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) ++df[std::move(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> kept(df.begin(), df.end());
  if (config.vocab_cap > 0 && kept.size() > config.vocab_cap) {
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    kept.resize(config.vocab_cap);
    std::sort(kept.begin(), kept.end());
  }
  std::vector<std::string> terms;
  std::vector<std::size_t> counts;
  for (auto& [t, c] : kept) {
    terms.push_back(t);
    counts.push_back(c);
  }
  return TfidfModel(config, std::move(terms), std::move(counts), corpus.size());
}

std::optional<std::size_t> TfidfModel::index_of(std::string_view term) const {
  auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

FeatureVector TfidfModel::transform(std::string_view text) const {
  std::map<std::size_t, double> tf;
  for (const auto& tok : tokenize(text, config_))
    if (auto it = index_.find(tok); it != index_.end()) tf[it->second] += 1.0;
  FeatureVector v(static_cast<Eigen::Index>(terms_.size()));
  v.reserve(static_cast<Eigen::Index>(tf.size()));
  double sq = 0.0;
  for (auto& [i, w] : tf) {
    w *= idf_[static_cast<Eigen::Index>(i)];
    sq += w * w;
  }
  const double inv = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
  for (const auto& [i, w] : tf) v.insertBack(static_cast<Eigen::Index>(i)) = w * inv;
  return v;
}

FeatureMatrix TfidfModel::transform_all(std::span<const std::string> texts) const {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t r = 0; r < texts.size(); ++r) {
    const auto v = transform(texts[r]);
    for (FeatureVector::InnerIterator it(v); it; ++it)
      triplets.emplace_back(static_cast<int>(r), static_cast<int>(it.index()), it.value());
  }
  FeatureMatrix m(static_cast<Eigen::Index>(texts.size()), static_cast<Eigen::Index>(terms_.size()));
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

LabelMatrix binarize_labels(const LabeledDataset& ds) { return binarize_labels(ds, ds.label_universe()); }

LabelMatrix binarize_labels(const LabeledDataset& ds, std::span<const TechniqueId> universe) {
  LabelMatrix out;
  out.universe.assign(universe.begin(), universe.end());
  out.bits.setZero(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(universe.size()));
  std::map<TechniqueId, Eigen::Index> col;
  for (std::size_t j = 0; j < universe.size(); ++j) col.emplace(universe[j], static_cast<Eigen::Index>(j));
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (const auto& t : ds.rules()[i].technique_ids)
      if (auto it = col.find(t); it != col.end()) out.bits(static_cast<Eigen::Index>(i), it->second) = 1;
  return out;
}

}  // namespace nidslabel
