#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "nidslabel/attack_catalog.hpp"
#include "nidslabel/dataset.hpp"

namespace nidslabel {

struct TokenizerConfig {
  std::size_t ngram_max = 1;   // 1 = unigrams only
  std::size_t vocab_cap = 0;   // keep the top-K terms by document frequency; 0 = no cap

  bool operator==(const TokenizerConfig&) const = default;
};

// Lowercase, split on non-alphanumerics, drop single letters (single digits
// are kept). With ngram_max > 1 the n-grams follow the unigrams, joined by ' '.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config = {});

// L2-normalized tf-idf weights, indices sorted.
using FeatureVector = Eigen::SparseVector<double>;
using FeatureMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class TfidfModel {
 public:
  // Rebuilds a fitted model. `terms` must be strictly sorted and
  // 1 <= df[i] <= document_count.
  TfidfModel(TokenizerConfig config, std::vector<std::string> terms, std::vector<std::size_t> df,
             std::size_t document_count);

  static TfidfModel fit(std::span<const std::string> corpus, const TokenizerConfig& config = {});

  FeatureVector transform(std::string_view text) const;
  FeatureMatrix transform_all(std::span<const std::string> texts) const;

  std::size_t vocabulary_size() const noexcept { return terms_.size(); }
  std::optional<std::size_t> index_of(std::string_view term) const;
  const std::vector<std::string>& terms() const noexcept { return terms_; }
  const std::vector<std::size_t>& document_frequency() const noexcept { return df_; }
  std::size_t document_count() const noexcept { return document_count_; }
  // ln((1 + N) / (1 + df)) + 1
  const Eigen::VectorXd& idf() const noexcept { return idf_; }
  const TokenizerConfig& config() const noexcept { return config_; }

 private:
  TokenizerConfig config_;
  std::vector<std::string> terms_;
  std::vector<std::size_t> df_;
  std::size_t document_count_ = 0;
  Eigen::VectorXd idf_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Row i, column j set iff rule i carries universe[j].
struct LabelMatrix {
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> bits;
  std::vector<TechniqueId> universe;
};

LabelMatrix binarize_labels(const LabeledDataset& ds);
LabelMatrix binarize_labels(const LabeledDataset& ds, std::span<const TechniqueId> universe);

}  // namespace nidslabel
