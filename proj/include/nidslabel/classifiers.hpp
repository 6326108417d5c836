#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "nidslabel/dataset.hpp"
#include "nidslabel/features.hpp"

namespace nidslabel {

enum class ModelType { svm, random_forest, gbm };
enum class ThresholdPolicy { positive_margin, top1_fallback };

std::string_view to_string(ModelType t) noexcept;
std::string_view to_string(ThresholdPolicy p) noexcept;
ModelType parse_model_type(std::string_view s);
ThresholdPolicy parse_threshold_policy(std::string_view s);

struct SvmParams {
  double c = 1.0;
  int epochs = 50;
  bool operator==(const SvmParams&) const = default;
};

struct ForestParams {
  int trees = 100;
  int max_depth = 16;     // 0 = unlimited
  int min_leaf = 1;
  int max_features = 0;   // features tried per node; 0 = ceil(sqrt(V)), -1 = all
  bool bootstrap = true;
  bool operator==(const ForestParams&) const = default;
};

struct BoostParams {
  int rounds = 100;
  double learning_rate = 0.1;
  int stump_depth = 2;
  bool operator==(const BoostParams&) const = default;
};

struct Hyperparams {
  ModelType model_type = ModelType::svm;
  SvmParams svm;
  ForestParams rf;
  BoostParams gbm;
  std::uint64_t seed = 0;

  void validate() const;  // throws ValidationError
  bool operator==(const Hyperparams&) const = default;
};

std::string describe(const Hyperparams& hp);

// Flat binary tree; a node with feature < 0 is a leaf holding `value`.
struct DecisionTree {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> value;

  double predict(const FeatureVector& x) const;
};

struct LinearModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
};

// score = votes / trees - 0.5, a tree votes when its leaf positive fraction > 0.5
struct ForestModel {
  std::vector<DecisionTree> trees;
};

// score = base_score + learning_rate * sum(tree outputs), a log-odds value
struct BoostedModel {
  double base_score = 0.0;
  double learning_rate = 0.1;
  std::vector<DecisionTree> trees;
};

using LabelModel = std::variant<LinearModel, ForestModel, BoostedModel>;

// Decision score; the label is predicted positive iff score > 0.
double score(const LabelModel& model, const FeatureVector& x);

// Binary learners over a sparse design matrix with labels in {0, 1}.
LinearModel train_linear_svm(const FeatureMatrix& x, std::span<const std::uint8_t> y, const SvmParams& p,
                             std::uint64_t seed);
// (lambda / 2) ||w||^2 + mean hinge loss, lambda = 1 / (C n).
double svm_objective(const LinearModel& m, const FeatureMatrix& x, std::span<const std::uint8_t> y,
                     const SvmParams& p);
ForestModel train_random_forest(const FeatureMatrix& x, std::span<const std::uint8_t> y, const ForestParams& p,
                                std::uint64_t seed);
BoostedModel train_gbm(const FeatureMatrix& x, std::span<const std::uint8_t> y, const BoostParams& p);

struct Prediction {
  TechniqueSet techniques;
  std::vector<double> scores;  // aligned with label_universe()
};

struct TrainOptions {
  TokenizerConfig tokenizer;
  ThresholdPolicy policy = ThresholdPolicy::positive_margin;
  std::size_t jobs = 1;
};

class MultiLabelClassifier {
 public:
  MultiLabelClassifier(TfidfModel tfidf, std::vector<TechniqueId> labels, std::vector<LabelModel> models,
                       ThresholdPolicy policy, Hyperparams hp);

  Prediction predict(const SnortRule& rule) const;
  Prediction predict_features(const FeatureVector& x) const;

  const TfidfModel& tfidf() const noexcept { return tfidf_; }
  const std::vector<TechniqueId>& label_universe() const noexcept { return labels_; }
  const std::vector<LabelModel>& label_models() const noexcept { return models_; }
  const Hyperparams& hyperparams() const noexcept { return hp_; }
  ThresholdPolicy threshold_policy() const noexcept { return policy_; }
  void set_threshold_policy(ThresholdPolicy p) noexcept { policy_ = p; }

  std::string to_json() const;
  static MultiLabelClassifier from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static MultiLabelClassifier load(const std::filesystem::path& path);

 private:
  TfidfModel tfidf_;
  std::vector<TechniqueId> labels_;
  std::vector<LabelModel> models_;
  ThresholdPolicy policy_;
  Hyperparams hp_;
};

// One binary model per label of train.label_universe(). Each label's RNG
// stream is derived from (hp.seed, label id), so results do not depend on
// thread scheduling or on which other labels are present.
MultiLabelClassifier train_multilabel(const LabeledDataset& train, const Hyperparams& hp,
                                      const TrainOptions& options = {});

struct TuneCandidate {
  Hyperparams hp;
  double validation_f1 = 0.0;
  std::size_t round = 0;  // 1-based
};

struct TuneReport {
  std::vector<TuneCandidate> evaluated;
  Hyperparams best;
  double best_f1 = 0.0;
};

struct TuneResult {
  MultiLabelClassifier model;
  TuneReport report;
};

// Local neighbours of hp used between tuning rounds.
std::vector<Hyperparams> perturb(const Hyperparams& hp);

// Round 1 scores `grid` on an internal 80/20 split of `train`; each later
// round scores the unseen neighbours of the best configuration so far. The
// winner (ties keep the earlier candidate) is retrained on all of `train`.
TuneResult tune(const LabeledDataset& train, std::span<const Hyperparams> grid, std::size_t rounds,
                std::uint64_t seed, const TrainOptions& options = {});

}  // namespace nidslabel
