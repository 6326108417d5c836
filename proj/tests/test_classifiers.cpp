#include <doctest.h>

#include <algorithm>
#include <random>

#include <json.hpp>

#include "nidslabel/classifiers.hpp"
#include "nidslabel/error.hpp"
#include "nidslabel/evaluation.hpp"
#include "test_support.hpp"

using namespace nidslabel;

namespace {

const std::vector<std::string> kLabels{"T1046", "T1059", "T1071", "T1105", "T1190"};

struct Synthetic {
  LabeledDataset train;
  LabeledDataset test;
};

const Synthetic& synthetic() {
  static const Synthetic s = [] {
    std::mt19937_64 gen(2024);
    auto train = testing::synthetic_dataset(gen, 200, kLabels, 1);
    auto test = testing::synthetic_dataset(gen, 100, kLabels, 10001);
    return Synthetic{std::move(train), std::move(test)};
  }();
  return s;
}

Hyperparams params(ModelType t, std::uint64_t seed = 3) {
  Hyperparams hp;
  hp.model_type = t;
  hp.seed = seed;
  hp.rf.trees = 30;
  hp.gbm.rounds = 40;
  return hp;
}

double test_f1(const MultiLabelClassifier& m, const LabeledDataset& ds) {
  ConfusionCounts c;
  for (const auto& r : ds.rules()) c += compare_sets(r.technique_ids, m.predict(r.rule).techniques);
  return micro_metrics(c).f1;
}

}  // namespace

TEST_CASE("linear SVM separates the synthetic corpus") {
  const auto m = train_multilabel(synthetic().train, params(ModelType::svm));
  CHECK(m.label_universe().size() == kLabels.size());
  CHECK(test_f1(m, synthetic().test) >= 0.95);
}

TEST_CASE("random forest and GBM reach 0.9 on the synthetic corpus") {
  CHECK(test_f1(train_multilabel(synthetic().train, params(ModelType::random_forest)), synthetic().test) >= 0.9);
  CHECK(test_f1(train_multilabel(synthetic().train, params(ModelType::gbm)), synthetic().test) >= 0.9);
}

TEST_CASE("a single training rule is memorized") {
  LabeledDataset one({{7, testing::rule_with(7, "content:\"portscan\";"), testing::ids({"T1046"})}});
  for (auto t : {ModelType::svm, ModelType::random_forest, ModelType::gbm}) {
    const auto m = train_multilabel(one, params(t));
    CHECK(m.predict(one.rules()[0].rule).techniques == testing::ids({"T1046"}));
  }
}

TEST_CASE("training is deterministic and independent of the job count") {
  for (auto t : {ModelType::svm, ModelType::random_forest, ModelType::gbm}) {
    TrainOptions serial, wide;
    wide.jobs = 4;
    const auto a = train_multilabel(synthetic().train, params(t), serial).to_json();
    const auto b = train_multilabel(synthetic().train, params(t), serial).to_json();
    const auto c = train_multilabel(synthetic().train, params(t), wide).to_json();
    CHECK(a == b);
    CHECK(a == c);
  }
}

TEST_CASE("different seeds give different forests") {
  const auto a = train_multilabel(synthetic().train, params(ModelType::random_forest, 1)).to_json();
  const auto b = train_multilabel(synthetic().train, params(ModelType::random_forest, 2)).to_json();
  CHECK(a != b);
}

TEST_CASE("top1_fallback only fills empty predictions with the argmax") {
  TrainOptions opts;
  auto m = train_multilabel(synthetic().train, params(ModelType::svm), opts);
  std::vector<SnortRule> probes{testing::rule_with(90001, "content:\"zebra quokka\";"),
                                testing::rule_with(90002, "content:\"noise3 noise7\";")};
  for (const auto& r : synthetic().test.rules()) probes.push_back(r.rule);
  for (const auto& r : probes) {
    m.set_threshold_policy(ThresholdPolicy::positive_margin);
    const auto plain = m.predict(r);
    m.set_threshold_policy(ThresholdPolicy::top1_fallback);
    const auto fb = m.predict(r);
    CHECK(fb.scores == plain.scores);
    if (!plain.techniques.empty()) {
      CHECK(fb.techniques == plain.techniques);
    } else {
      REQUIRE(fb.techniques.size() == 1);
      const auto best = std::max_element(plain.scores.begin(), plain.scores.end()) - plain.scores.begin();
      CHECK(*fb.techniques.begin() == m.label_universe()[static_cast<std::size_t>(best)]);
    }
  }
}

TEST_CASE("reordering rule options does not change predictions") {
  const auto m = train_multilabel(synthetic().train, params(ModelType::svm));
  const auto a = parse_rule(
      R"(alert tcp any any -> any 80 (msg:"sig0w0 probe"; content:"sig1w2 noise4"; flow:to_server; sid:5;))");
  const auto b = parse_rule(
      R"(alert tcp any any -> any 80 (flow:to_server; content:"sig1w2 noise4"; sid:5; msg:"sig0w0 probe";))");
  CHECK(m.predict(a).techniques == m.predict(b).techniques);
  CHECK(m.predict(a).scores == m.predict(b).scores);
}

TEST_CASE("per-label models do not depend on the other labels") {
  // Adding a label to some rules must leave the models of the existing labels unchanged.
  std::vector<LabeledRule> rules = synthetic().train.rules();
  for (std::size_t i = 0; i < rules.size(); i += 4) rules[i].technique_ids.insert(TechniqueId("T1498"));
  const LabeledDataset extended(std::move(rules));
  for (auto t : {ModelType::svm, ModelType::random_forest, ModelType::gbm}) {
    const auto base = train_multilabel(synthetic().train, params(t));
    const auto ext = train_multilabel(extended, params(t));
    REQUIRE(ext.label_universe().size() == base.label_universe().size() + 1);
    for (std::size_t j = 0; j < base.label_universe().size(); ++j) {
      const auto& id = base.label_universe()[j];
      const auto k = std::find(ext.label_universe().begin(), ext.label_universe().end(), id) -
                     ext.label_universe().begin();
      for (const auto& r : synthetic().test.rules()) {
        const auto x = base.tfidf().transform(feature_text(r.rule));
        CHECK(score(base.label_models()[j], x) == score(ext.label_models()[static_cast<std::size_t>(k)], x));
      }
    }
  }
}

TEST_CASE("SVM training lowers the objective") {
  const auto& ds = synthetic().train;
  std::vector<std::string> texts;
  for (const auto& r : ds.rules()) texts.push_back(feature_text(r.rule));
  const auto tfidf = TfidfModel::fit(texts);
  const auto x = tfidf.transform_all(texts);
  const auto bits = binarize_labels(ds);
  for (Eigen::Index j = 0; j < bits.bits.cols(); ++j) {
    std::vector<std::uint8_t> y(bits.bits.col(j).data(), bits.bits.col(j).data() + bits.bits.rows());
    SvmParams p;
    LinearModel zero{Eigen::VectorXd::Zero(x.cols()), 0.0};
    const auto trained = train_linear_svm(x, y, p, 11);
    CHECK(svm_objective(zero, x, y, p) == doctest::Approx(1.0));
    CHECK(svm_objective(trained, x, y, p) < 0.5 * svm_objective(zero, x, y, p));
  }
}

TEST_CASE("an unrestricted single tree fits its training data") {
  const auto& ds = synthetic().train;
  std::vector<std::string> texts;
  for (const auto& r : ds.rules()) texts.push_back(feature_text(r.rule));
  const auto x = TfidfModel::fit(texts).transform_all(texts);
  const auto bits = binarize_labels(ds);
  ForestParams p;
  p.trees = 1;
  p.max_depth = 0;
  p.max_features = -1;
  p.bootstrap = false;
  for (Eigen::Index j = 0; j < bits.bits.cols(); ++j) {
    std::vector<std::uint8_t> y(bits.bits.col(j).data(), bits.bits.col(j).data() + bits.bits.rows());
    const LabelModel fm = train_random_forest(x, y, p, 5);
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const FeatureVector row = x.row(i).transpose();
      correct += (score(fm, row) > 0) == (y[static_cast<std::size_t>(i)] == 1);
    }
    CHECK(correct == y.size());
  }
}

TEST_CASE("model JSON round trips for every model type") {
  for (auto t : {ModelType::svm, ModelType::random_forest, ModelType::gbm}) {
    TrainOptions opts;
    opts.policy = ThresholdPolicy::top1_fallback;
    opts.tokenizer.ngram_max = 2;
    const auto m = train_multilabel(synthetic().train, params(t), opts);
    const auto json = m.to_json();
    const auto back = MultiLabelClassifier::from_json(json);
    CHECK(back.to_json() == json);
    CHECK(back.hyperparams() == m.hyperparams());
    CHECK(back.threshold_policy() == ThresholdPolicy::top1_fallback);
    for (const auto& r : synthetic().test.rules()) CHECK(back.predict(r.rule).scores == m.predict(r.rule).scores);

    testing::TempDir dir;
    m.save(dir / "model.json");
    CHECK(MultiLabelClassifier::load(dir / "model.json").to_json() == json);
  }
}

TEST_CASE("malformed model files are rejected") {
  CHECK_THROWS_AS(MultiLabelClassifier::from_json("{"), ParseError);
  CHECK_THROWS_AS(MultiLabelClassifier::from_json(R"({"format":"other","version":1})"), ParseError);
  auto json = nlohmann::json::parse(train_multilabel(synthetic().train, params(ModelType::svm)).to_json());
  json["models"][0]["weights"].erase(0);
  CHECK_THROWS_AS(MultiLabelClassifier::from_json(json.dump()), ParseError);
  CHECK_THROWS_AS(MultiLabelClassifier::load("/nonexistent/model.json"), ValidationError);
}

TEST_CASE("hyperparameter validation") {
  Hyperparams hp;
  CHECK_NOTHROW(hp.validate());
  auto bad = [](auto mutate) {
    Hyperparams h;
    mutate(h);
    CHECK_THROWS_AS(h.validate(), ValidationError);
  };
  bad([](Hyperparams& h) { h.svm.c = 0; });
  bad([](Hyperparams& h) { h.svm.epochs = 0; });
  bad([](Hyperparams& h) { h.rf.trees = 0; });
  bad([](Hyperparams& h) { h.rf.max_depth = -1; });
  bad([](Hyperparams& h) { h.rf.min_leaf = 0; });
  bad([](Hyperparams& h) { h.gbm.learning_rate = 1.5; });
  bad([](Hyperparams& h) { h.gbm.stump_depth = 0; });
  CHECK_THROWS_AS(parse_model_type("knn"), ValidationError);
  CHECK(parse_model_type("rf") == ModelType::random_forest);
  CHECK_THROWS_AS(train_multilabel(LabeledDataset{}, hp), ValidationError);
}

TEST_CASE("tune with a one-point grid and one round equals a plain retrain") {
  const auto hp = params(ModelType::svm);
  const std::vector<Hyperparams> grid{hp};
  const auto result = tune(synthetic().train, grid, 1, 9);
  REQUIRE(result.report.evaluated.size() == 1);
  CHECK(result.report.best == hp);
  CHECK(result.model.to_json() == train_multilabel(synthetic().train, hp).to_json());
}

TEST_CASE("tune picks the best evaluated candidate deterministically") {
  auto a = params(ModelType::svm);
  auto b = a;
  b.svm.c = 0.01;
  b.svm.epochs = 2;
  const std::vector<Hyperparams> grid{b, a};
  const auto r1 = tune(synthetic().train, grid, 2, 4);
  const auto r2 = tune(synthetic().train, grid, 2, 4);
  CHECK(r1.report.evaluated.size() > grid.size());
  for (const auto& c : r1.report.evaluated) {
    CHECK(r1.report.best_f1 >= c.validation_f1);
    CHECK(!perturb(c.hp).empty());
  }
  CHECK(r1.report.evaluated.front().round == 1);
  CHECK(r1.report.evaluated.back().round == 2);
  CHECK(r1.model.to_json() == r2.model.to_json());
  CHECK(r1.report.best == r2.report.best);
  CHECK(r1.model.hyperparams() == r1.report.best);
  CHECK_THROWS_AS(tune(synthetic().train, std::span<const Hyperparams>{}, 1, 0), ValidationError);
  CHECK_THROWS_AS(tune(synthetic().train, grid, 0, 0), ValidationError);
}
