#include "nidslabel/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "nidslabel/error.hpp"
#include "nidslabel/evaluation.hpp"
#include "nidslabel/parallel.hpp"
#include "nidslabel/random.hpp"
#include "trees.hpp"

namespace nidslabel {

using nlohmann::ordered_json;

std::string_view to_string(ModelType t) noexcept {
  switch (t) {
    case ModelType::svm: return "svm";
    case ModelType::random_forest: return "random_forest";
    case ModelType::gbm: return "gbm";
  }
  return "svm";
}

std::string_view to_string(ThresholdPolicy p) noexcept {
  return p == ThresholdPolicy::top1_fallback ? "top1_fallback" : "positive_margin";
}

ModelType parse_model_type(std::string_view s) {
  if (s == "svm") return ModelType::svm;
  if (s == "random_forest" || s == "rf") return ModelType::random_forest;
  if (s == "gbm") return ModelType::gbm;
  throw ValidationError("unknown model type '" + std::string(s) + "'");
}

ThresholdPolicy parse_threshold_policy(std::string_view s) {
  if (s == "positive_margin") return ThresholdPolicy::positive_margin;
  if (s == "top1_fallback") return ThresholdPolicy::top1_fallback;
  throw ValidationError("unknown threshold policy '" + std::string(s) + "'");
}

void Hyperparams::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("hyperparameters: " + m); };
  if (!(svm.c > 0)) fail("svm C must be positive");
  if (svm.epochs < 1) fail("svm epochs must be positive");
  if (rf.trees < 1) fail("rf trees must be positive");
  if (rf.max_depth < 0) fail("rf max_depth must be >= 0");
  if (rf.min_leaf < 1) fail("rf min_leaf must be positive");
  if (rf.max_features < -1) fail("rf max_features must be >= -1");
  if (gbm.rounds < 1) fail("gbm rounds must be positive");
  if (!(gbm.learning_rate > 0 && gbm.learning_rate <= 1)) fail("gbm learning_rate must be in (0, 1]");
  if (gbm.stump_depth < 1) fail("gbm stump_depth must be positive");
}

std::string describe(const Hyperparams& hp) {
  std::ostringstream os;
  os << to_string(hp.model_type);
  switch (hp.model_type) {
    case ModelType::svm: os << "(C=" << hp.svm.c << ", epochs=" << hp.svm.epochs << ")"; break;
    case ModelType::random_forest:
      os << "(trees=" << hp.rf.trees << ", max_depth=" << hp.rf.max_depth << ", min_leaf=" << hp.rf.min_leaf << ")";
      break;
    case ModelType::gbm:
      os << "(rounds=" << hp.gbm.rounds << ", lr=" << hp.gbm.learning_rate << ", depth=" << hp.gbm.stump_depth << ")";
      break;
  }
  return os.str();
}

double DecisionTree::predict(const FeatureVector& x) const {
  int node = 0;
  while (feature[static_cast<std::size_t>(node)] >= 0) {
    const auto n = static_cast<std::size_t>(node);
    node = x.coeff(feature[n]) <= threshold[n] ? left[n] : right[n];
  }
  return value[static_cast<std::size_t>(node)];
}

double score(const LabelModel& model, const FeatureVector& x) {
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LinearModel>) {
          double s = m.bias;
          for (FeatureVector::InnerIterator it(x); it; ++it) s += m.weights[it.index()] * it.value();
          return s;
        } else if constexpr (std::is_same_v<M, ForestModel>) {
          if (m.trees.empty()) return -0.5;
          std::size_t votes = 0;
          for (const auto& t : m.trees) votes += t.predict(x) > 0.5 ? 1 : 0;
          return static_cast<double>(votes) / static_cast<double>(m.trees.size()) - 0.5;
        } else {
          double s = m.base_score;
          for (const auto& t : m.trees) s += m.learning_rate * t.predict(x);
          return s;
        }
      },
      model);
}

// Pegasos-style primal subgradient descent. The bias is an extra feature
// with constant value 1. w = scale * v keeps the shrink step O(1); the
// returned model averages the epoch-end iterates of the second half.
LinearModel train_linear_svm(const FeatureMatrix& x, std::span<const std::uint8_t> y, const SvmParams& p,
                             std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(x.rows());
  const Eigen::Index dim = x.cols();
  LinearModel out;
  out.weights = Eigen::VectorXd::Zero(dim);
  if (n == 0) return out;
  const double lambda = 1.0 / (p.c * static_cast<double>(n));
  const double radius_sq = 1.0 / lambda;

  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  double v_bias = 0.0;
  double scale = 1.0;
  double sq = 0.0;  // ||w||^2 including the bias weight
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(dim);
  double avg_bias = 0.0;
  std::size_t averaged = 0;

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t t = 0;
  const int first_averaged = p.epochs / 2;
  for (int epoch = 0; epoch < p.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (auto i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double label = y[i] ? 1.0 : -1.0;
      double vdotx = v_bias;
      double xsq = 1.0;
      for (FeatureMatrix::InnerIterator it(x, static_cast<Eigen::Index>(i)); it; ++it) {
        vdotx += v[it.col()] * it.value();
        xsq += it.value() * it.value();
      }
      const double wdotx = scale * vdotx;
      const double factor = 1.0 - eta * lambda;
      if (factor <= 0.0) {
        v.setZero();
        v_bias = 0.0;
        scale = 1.0;
        sq = 0.0;
      } else {
        scale *= factor;
        sq *= factor * factor;
      }
      if (label * wdotx < 1.0) {
        const double step = eta * label;
        const double shrunk_dot = factor > 0.0 ? factor * wdotx : 0.0;
        sq += 2.0 * step * shrunk_dot + step * step * xsq;
        const double coef = step / scale;
        for (FeatureMatrix::InnerIterator it(x, static_cast<Eigen::Index>(i)); it; ++it)
          v[it.col()] += coef * it.value();
        v_bias += coef;
      }
      if (sq > radius_sq) {
        scale *= std::sqrt(radius_sq / sq);
        sq = radius_sq;
      }
      if (scale < 1e-9) {
        v *= scale;
        v_bias *= scale;
        scale = 1.0;
      }
    }
    if (epoch >= first_averaged) {
      avg += scale * v;
      avg_bias += scale * v_bias;
      ++averaged;
    }
  }
  out.weights = avg / static_cast<double>(averaged);
  out.bias = avg_bias / static_cast<double>(averaged);
  return out;
}

double svm_objective(const LinearModel& m, const FeatureMatrix& x, std::span<const std::uint8_t> y,
                     const SvmParams& p) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n == 0) return 0.0;
  const double lambda = 1.0 / (p.c * static_cast<double>(n));
  double hinge = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = m.bias;
    for (FeatureMatrix::InnerIterator it(x, static_cast<Eigen::Index>(i)); it; ++it)
      s += m.weights[it.col()] * it.value();
    hinge += std::max(0.0, 1.0 - (y[i] ? 1.0 : -1.0) * s);
  }
  const double wsq = m.weights.squaredNorm() + m.bias * m.bias;
  return 0.5 * lambda * wsq + hinge / static_cast<double>(n);
}

ForestModel train_random_forest(const FeatureMatrix& x, std::span<const std::uint8_t> y, const ForestParams& p,
                                std::uint64_t seed) {
  const detail::ColumnMatrix cols(x);
  const auto n = static_cast<std::size_t>(x.rows());
  detail::TreeConfig config;
  config.criterion = detail::SplitCriterion::gini;
  config.max_depth = p.max_depth;
  config.min_leaf = static_cast<double>(p.min_leaf);
  if (p.max_features == 0)
    config.max_features = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(x.cols()))));
  else
    config.max_features = p.max_features;

  ForestModel forest;
  std::vector<double> weight(n), positive(n);
  for (int t = 0; t < p.trees; ++t) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
    if (p.bootstrap) {
      std::fill(weight.begin(), weight.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) weight[rng.uniform_index(n)] += 1.0;
    } else {
      std::fill(weight.begin(), weight.end(), 1.0);
    }
    for (std::size_t i = 0; i < n; ++i) positive[i] = y[i] ? weight[i] : 0.0;
    forest.trees.push_back(detail::grow_tree(cols, weight, positive, weight, config, rng));
  }
  return forest;
}

BoostedModel train_gbm(const FeatureMatrix& x, std::span<const std::uint8_t> y, const BoostParams& p) {
  const detail::ColumnMatrix cols(x);
  const auto n = static_cast<std::size_t>(x.rows());
  BoostedModel model;
  model.learning_rate = p.learning_rate;
  if (n == 0) return model;
  const double pos = static_cast<double>(std::count(y.begin(), y.end(), std::uint8_t{1}));
  const double prior = std::clamp(pos / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
  model.base_score = std::log(prior / (1.0 - prior));

  detail::TreeConfig config;
  config.criterion = detail::SplitCriterion::newton;
  config.max_depth = p.stump_depth;
  config.min_leaf = 1.0;
  config.max_features = -1;
  config.l2 = 1.0;

  std::vector<double> margin(n, model.base_score), grad(n), hess(n), ones(n, 1.0);
  std::vector<FeatureVector> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = x.row(static_cast<Eigen::Index>(i));
  Rng unused(0);
  for (int round = 0; round < p.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double prob = 1.0 / (1.0 + std::exp(-margin[i]));
      grad[i] = prob - (y[i] ? 1.0 : 0.0);
      hess[i] = std::max(prob * (1.0 - prob), 1e-12);
    }
    auto tree = detail::grow_tree(cols, hess, grad, ones, config, unused);
    for (std::size_t i = 0; i < n; ++i) margin[i] += p.learning_rate * tree.predict(rows[i]);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

MultiLabelClassifier::MultiLabelClassifier(TfidfModel tfidf, std::vector<TechniqueId> labels,
                                           std::vector<LabelModel> models, ThresholdPolicy policy, Hyperparams hp)
    : tfidf_(std::move(tfidf)), labels_(std::move(labels)), models_(std::move(models)), policy_(policy),
      hp_(hp) {
  if (labels_.size() != models_.size()) throw ValidationError("one model per label required");
}

Prediction MultiLabelClassifier::predict(const SnortRule& rule) const {
  return predict_features(tfidf_.transform(feature_text(rule)));
}

Prediction MultiLabelClassifier::predict_features(const FeatureVector& x) const {
  Prediction p;
  p.scores.reserve(models_.size());
  for (std::size_t j = 0; j < models_.size(); ++j) {
    const double s = score(models_[j], x);
    p.scores.push_back(s);
    if (s > 0) p.techniques.insert(labels_[j]);
  }
  if (p.techniques.empty() && policy_ == ThresholdPolicy::top1_fallback && !labels_.empty()) {
    const auto best = std::max_element(p.scores.begin(), p.scores.end());
    p.techniques.insert(labels_[static_cast<std::size_t>(best - p.scores.begin())]);
  }
  return p;
}

namespace {

ordered_json tree_to_json(const DecisionTree& t) {
  return ordered_json{{"feature", t.feature}, {"threshold", t.threshold}, {"left", t.left},
                      {"right", t.right},     {"value", t.value}};
}

DecisionTree tree_from_json(const nlohmann::json& j, std::size_t vocab) {
  DecisionTree t;
  j.at("feature").get_to(t.feature);
  j.at("threshold").get_to(t.threshold);
  j.at("left").get_to(t.left);
  j.at("right").get_to(t.right);
  j.at("value").get_to(t.value);
  const auto n = t.feature.size();
  if (n == 0 || t.threshold.size() != n || t.left.size() != n || t.right.size() != n || t.value.size() != n)
    throw ParseError("model file: inconsistent tree arrays");
  for (std::size_t i = 0; i < n; ++i) {
    if (t.feature[i] < 0) continue;
    if (static_cast<std::size_t>(t.feature[i]) >= vocab || t.left[i] <= static_cast<int>(i) ||
        t.right[i] <= static_cast<int>(i) || static_cast<std::size_t>(t.left[i]) >= n ||
        static_cast<std::size_t>(t.right[i]) >= n)
      throw ParseError("model file: malformed tree node " + std::to_string(i));
  }
  return t;
}

ordered_json hyperparams_to_json(const Hyperparams& hp) {
  return ordered_json{
      {"model_type", std::string(to_string(hp.model_type))},
      {"seed", hp.seed},
      {"svm", {{"c", hp.svm.c}, {"epochs", hp.svm.epochs}}},
      {"random_forest",
       {{"trees", hp.rf.trees},
        {"max_depth", hp.rf.max_depth},
        {"min_leaf", hp.rf.min_leaf},
        {"max_features", hp.rf.max_features},
        {"bootstrap", hp.rf.bootstrap}}},
      {"gbm",
       {{"rounds", hp.gbm.rounds}, {"learning_rate", hp.gbm.learning_rate}, {"stump_depth", hp.gbm.stump_depth}}}};
}

Hyperparams hyperparams_from_json(const nlohmann::json& j) {
  Hyperparams hp;
  hp.model_type = parse_model_type(j.at("model_type").get<std::string>());
  hp.seed = j.at("seed").get<std::uint64_t>();
  const auto& s = j.at("svm");
  hp.svm = {s.at("c").get<double>(), s.at("epochs").get<int>()};
  const auto& r = j.at("random_forest");
  hp.rf = {r.at("trees").get<int>(), r.at("max_depth").get<int>(), r.at("min_leaf").get<int>(),
           r.at("max_features").get<int>(), r.at("bootstrap").get<bool>()};
  const auto& g = j.at("gbm");
  hp.gbm = {g.at("rounds").get<int>(), g.at("learning_rate").get<double>(), g.at("stump_depth").get<int>()};
  return hp;
}

}  // namespace

std::string MultiLabelClassifier::to_json() const {
  ordered_json doc;
  doc["format"] = "nidslabel-multilabel-model";
  doc["version"] = 1;
  doc["threshold_policy"] = std::string(to_string(policy_));
  doc["hyperparams"] = hyperparams_to_json(hp_);
  doc["tfidf"] = {{"tokenizer", {{"ngram_max", tfidf_.config().ngram_max}, {"vocab_cap", tfidf_.config().vocab_cap}}},
                  {"document_count", tfidf_.document_count()},
                  {"terms", tfidf_.terms()},
                  {"df", tfidf_.document_frequency()}};
  auto labels = ordered_json::array();
  for (const auto& l : labels_) labels.push_back(l.str());
  doc["labels"] = std::move(labels);
  auto models = ordered_json::array();
  for (const auto& m : models_) {
    models.push_back(std::visit(
        [](const auto& mm) -> ordered_json {
          using M = std::decay_t<decltype(mm)>;
          if constexpr (std::is_same_v<M, LinearModel>) {
            return {{"kind", "linear"},
                    {"bias", mm.bias},
                    {"weights", std::vector<double>(mm.weights.data(), mm.weights.data() + mm.weights.size())}};
          } else if constexpr (std::is_same_v<M, ForestModel>) {
            auto trees = ordered_json::array();
            for (const auto& t : mm.trees) trees.push_back(tree_to_json(t));
            return {{"kind", "forest"}, {"trees", std::move(trees)}};
          } else {
            auto trees = ordered_json::array();
            for (const auto& t : mm.trees) trees.push_back(tree_to_json(t));
            return {{"kind", "boosted"},
                    {"base_score", mm.base_score},
                    {"learning_rate", mm.learning_rate},
                    {"trees", std::move(trees)}};
          }
        },
        m));
  }
  doc["models"] = std::move(models);
  return doc.dump() + "\n";
}

MultiLabelClassifier MultiLabelClassifier::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "nidslabel-multilabel-model")
      throw ParseError("not a nidslabel model file");
    if (doc.at("version").get<int>() != 1)
      throw ParseError("unsupported model file version " + doc["version"].dump());
    const auto& tf = doc.at("tfidf");
    TokenizerConfig tok;
    tok.ngram_max = tf.at("tokenizer").at("ngram_max").get<std::size_t>();
    tok.vocab_cap = tf.at("tokenizer").at("vocab_cap").get<std::size_t>();
    TfidfModel tfidf(tok, tf.at("terms").get<std::vector<std::string>>(),
                     tf.at("df").get<std::vector<std::size_t>>(), tf.at("document_count").get<std::size_t>());
    std::vector<TechniqueId> labels;
    for (const auto& l : doc.at("labels")) labels.emplace_back(l.get<std::string>());
    const std::size_t vocab = tfidf.vocabulary_size();
    std::vector<LabelModel> models;
    for (const auto& m : doc.at("models")) {
      const auto kind = m.at("kind").get<std::string>();
      if (kind == "linear") {
        const auto w = m.at("weights").get<std::vector<double>>();
        if (w.size() != vocab) throw ParseError("model file: weight vector length mismatch");
        LinearModel lm;
        lm.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
        lm.bias = m.at("bias").get<double>();
        models.emplace_back(std::move(lm));
      } else if (kind == "forest") {
        ForestModel fm;
        for (const auto& t : m.at("trees")) fm.trees.push_back(tree_from_json(t, vocab));
        models.emplace_back(std::move(fm));
      } else if (kind == "boosted") {
        BoostedModel bm;
        bm.base_score = m.at("base_score").get<double>();
        bm.learning_rate = m.at("learning_rate").get<double>();
        for (const auto& t : m.at("trees")) bm.trees.push_back(tree_from_json(t, vocab));
        models.emplace_back(std::move(bm));
      } else {
        throw ParseError("model file: unknown model kind '" + kind + "'");
      }
    }
    return MultiLabelClassifier(std::move(tfidf), std::move(labels), std::move(models),
                                parse_threshold_policy(doc.at("threshold_policy").get<std::string>()),
                                hyperparams_from_json(doc.at("hyperparams")));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
}

void MultiLabelClassifier::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write model file " + path.string());
  out << to_json();
}

MultiLabelClassifier MultiLabelClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

namespace {

std::uint64_t label_stream(const TechniqueId& id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : id.str()) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

}  // namespace

MultiLabelClassifier train_multilabel(const LabeledDataset& train, const Hyperparams& hp,
                                      const TrainOptions& options) {
  hp.validate();
  if (train.empty()) throw ValidationError("cannot train on an empty dataset");
  std::vector<std::string> texts;
  texts.reserve(train.size());
  for (const auto& r : train.rules()) texts.push_back(feature_text(r.rule));
  auto tfidf = TfidfModel::fit(texts, options.tokenizer);
  const FeatureMatrix x = tfidf.transform_all(texts);
  const auto labels = binarize_labels(train);
  const auto L = labels.universe.size();

  std::vector<std::vector<std::uint8_t>> columns(L);
  for (std::size_t j = 0; j < L; ++j) {
    const auto col = labels.bits.col(static_cast<Eigen::Index>(j));
    columns[j].assign(col.data(), col.data() + col.size());
    if (std::find(columns[j].begin(), columns[j].end(), std::uint8_t{1}) == columns[j].end())
      throw ValidationError("label " + labels.universe[j].str() + " has no positive training rules");
  }

  std::vector<LabelModel> models(L);
  parallel_for(L, options.jobs, [&](std::size_t j) {
    const auto seed = mix_seed(hp.seed, label_stream(labels.universe[j]));
    switch (hp.model_type) {
      case ModelType::svm: models[j] = train_linear_svm(x, columns[j], hp.svm, seed); break;
      case ModelType::random_forest: models[j] = train_random_forest(x, columns[j], hp.rf, seed); break;
      case ModelType::gbm: models[j] = train_gbm(x, columns[j], hp.gbm); break;
    }
  });
  return MultiLabelClassifier(std::move(tfidf), labels.universe, std::move(models), options.policy, hp);
}

std::vector<Hyperparams> perturb(const Hyperparams& hp) {
  std::vector<Hyperparams> out;
  auto push = [&](Hyperparams h) {
    try {
      h.validate();
    } catch (const ValidationError&) {
      return;
    }
    if (!(h == hp) && std::find(out.begin(), out.end(), h) == out.end()) out.push_back(h);
  };
  Hyperparams h = hp;
  switch (hp.model_type) {
    case ModelType::svm:
      h = hp; h.svm.c *= 2; push(h);
      h = hp; h.svm.c /= 2; push(h);
      h = hp; h.svm.epochs += 10; push(h);
      h = hp; h.svm.epochs -= 10; push(h);
      break;
    case ModelType::random_forest:
      h = hp; h.rf.trees += 25; push(h);
      h = hp; h.rf.trees -= 25; push(h);
      if (hp.rf.max_depth > 0) {
        h = hp; h.rf.max_depth += 2; push(h);
        h = hp; h.rf.max_depth -= 2; push(h);
      }
      h = hp; h.rf.min_leaf += 1; push(h);
      h = hp; h.rf.min_leaf -= 1; push(h);
      break;
    case ModelType::gbm:
      h = hp; h.gbm.rounds += 25; push(h);
      h = hp; h.gbm.rounds -= 25; push(h);
      h = hp; h.gbm.learning_rate = std::min(1.0, hp.gbm.learning_rate * 2); push(h);
      h = hp; h.gbm.learning_rate /= 2; push(h);
      h = hp; h.gbm.stump_depth += 1; push(h);
      h = hp; h.gbm.stump_depth -= 1; push(h);
      break;
  }
  return out;
}

TuneResult tune(const LabeledDataset& train, std::span<const Hyperparams> grid, std::size_t rounds,
                std::uint64_t seed, const TrainOptions& options) {
  if (rounds < 1) throw ValidationError("tuning rounds must be >= 1");
  if (grid.empty()) throw ValidationError("tuning grid is empty");
  const auto parts = stratified_split(train, 0.8, seed);

  TuneReport report;
  std::vector<Hyperparams> candidates(grid.begin(), grid.end());
  bool have_best = false;
  for (std::size_t round = 1; round <= rounds && !candidates.empty(); ++round) {
    for (const auto& hp : candidates) {
      const auto model = train_multilabel(parts.train, hp, options);
      ConfusionCounts counts;
      for (const auto& r : parts.test.rules()) counts += compare_sets(r.technique_ids, model.predict(r.rule).techniques);
      const double f1 = micro_metrics(counts).f1;
      report.evaluated.push_back({hp, f1, round});
      if (!have_best || f1 > report.best_f1) {
        report.best = hp;
        report.best_f1 = f1;
        have_best = true;
      }
    }
    candidates.clear();
    for (const auto& h : perturb(report.best)) {
      const bool seen = std::any_of(report.evaluated.begin(), report.evaluated.end(),
                                    [&](const TuneCandidate& c) { return c.hp == h; });
      if (!seen) candidates.push_back(h);
    }
  }
  auto model = train_multilabel(train, report.best, options);
  return {std::move(model), std::move(report)};
}

}  // namespace nidslabel
