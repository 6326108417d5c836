#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "nidslabel/app.hpp"
#include "nidslabel/config.hpp"
#include "nidslabel/error.hpp"
#include "nidslabel/hashing.hpp"
#include "test_support.hpp"

using namespace nidslabel;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "nidslabel");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string src(const std::string& rel) { return testing::source_path(rel).string(); }

std::vector<nlohmann::json> manifest_lines(const fs::path& dir) {
  std::vector<nlohmann::json> out;
  std::istringstream in(testing::slurp(dir / "manifest.jsonl"));
  std::string line;
  while (std::getline(in, line)) out.push_back(nlohmann::json::parse(line));
  return out;
}

// ingest + split of the fixture corpus with the seed-7 config.
void prepare(const testing::TempDir& dir) {
  const std::string out = dir.path().string();
  REQUIRE(cli({"ingest", "--config", src("data/fixtures/configs/ticl2.toml"), "--out", out, "--rules",
               src("data/fixtures/corpus/community.rules"), "--labels", src("data/fixtures/corpus/labels.csv")})
              .code == 0);
  REQUIRE(cli({"split", "--config", src("data/fixtures/configs/ticl2.toml"), "--out", out, "--in",
               (dir / "dataset.jsonl").string()})
              .code == 0);
}

}  // namespace

TEST_CASE("ingest and split the fixture corpus") {
  testing::TempDir dir;
  prepare(dir);
  const auto report = nlohmann::json::parse(testing::slurp(dir / "ingest_report.json"));
  CHECK(report["rules"] == 87);
  CHECK(report["labels"] == 15);
  CHECK(report["unlabeled_dropped"] == 1);

  const auto stats = nlohmann::json::parse(testing::slurp(dir / "split_stats.json"));
  CHECK(stats["seed"] == 7);
  CHECK(stats["core_rules"] == 77);
  CHECK(stats["train_rules"] == 63);
  CHECK(stats["test_rules"] == 14);
  CHECK(stats["rare_rules"] == 10);
  CHECK(stats["rare_techniques"].size() == 5);
  for (const auto& [label, s] : stats["per_label"].items()) {
    CHECK(s["train"].get<int>() + s["test"].get<int>() == s["total"].get<int>());
    CHECK(std::abs(s["train"].get<double>() - s["train_target"].get<double>()) <= 1.0);
  }
  const auto train = load_jsonl(dir / "train.jsonl");
  const auto rare = load_jsonl(dir / "rare.jsonl");
  CHECK(train.size() == 63);
  CHECK(rare.size() == 10);
  CHECK(testing::slurp(dir / "rare.jsonl").find("\"rare\"") != std::string::npos);
}

TEST_CASE("train, predict and evaluate at both levels") {
  testing::TempDir dir;
  prepare(dir);
  const std::string out = dir.path().string();
  const std::string svm_cfg = src("data/fixtures/configs/svm.toml");
  REQUIRE(cli({"train", "--config", svm_cfg, "--out", out, "--train", (dir / "train.jsonl").string()}).code == 0);
  REQUIRE(cli({"predict", "--config", svm_cfg, "--out", out, "--model", (dir / "model.json").string(), "--in",
               (dir / "test.jsonl").string()})
              .code == 0);
  REQUIRE(fs::exists(dir / "predictions-SVM.jsonl"));
  const auto r = cli({"evaluate", "--config", svm_cfg, "--out", out, "--gold", (dir / "test.jsonl").string(),
                      "--pred", (dir / "predictions-SVM.jsonl").string(), "--level", "tactic"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("SVM") != std::string::npos);
  const auto eval = nlohmann::json::parse(testing::slurp(dir / "evaluation-SVM.json"));
  CHECK(eval["level"] == "tactic");
  CHECK(eval["n_rules"] == 14);
  const auto results = nlohmann::json::parse(testing::slurp(dir / "results.json"));
  REQUIRE(results.size() == 1);
  CHECK(results[0]["technique"]["f1"].get<double>() >= 0.7);
  CHECK(results[0]["tactic"]["f1"].get<double>() >= results[0]["technique"]["f1"].get<double>() - 1e-12);
}

TEST_CASE("baselines through the CLI, RT tactic cells are N/A") {
  testing::TempDir dir;
  prepare(dir);
  const std::string out = dir.path().string(), cfg = src("data/fixtures/configs/ticl2.toml");
  REQUIRE(cli({"baseline", "--config", cfg, "--out", out, "--train", (dir / "train.jsonl").string(), "--test",
               (dir / "test.jsonl").string()})
              .code == 0);
  for (const auto* n : {"Top-1", "Top-2", "RT-1", "RT-2"})
    CHECK(fs::exists(dir / (std::string("predictions-") + n + ".jsonl")));
  const auto r = cli({"evaluate", "--config", cfg, "--out", out, "--gold", (dir / "test.jsonl").string(), "--pred",
                      (dir / "predictions-Top-1.jsonl").string(), "--pred",
                      "RT-1=" + (dir / "predictions-RT-1.jsonl").string()});
  REQUIRE(r.code == 0);
  const auto results = nlohmann::json::parse(testing::slurp(dir / "results.json"));
  CHECK(results[0]["predictor"] == "Top-1");
  CHECK(results[0]["tactic"].is_object());
  CHECK(results[1]["predictor"] == "RT-1");
  CHECK(results[1]["tactic"] == "N/A");
  CHECK(r.out.find("N/A") != std::string::npos);
}

TEST_CASE("llm-label replays a transcript byte-identically") {
  testing::TempDir a, b;
  for (const auto* dir : {&a, &b}) {
    prepare(*dir);
    const auto r = cli({"llm-label", "--config", src("data/fixtures/configs/ticl2.toml"), "--out",
                        dir->path().string(), "--in", (*dir / "rare.jsonl").string(), "--examples",
                        (*dir / "train.jsonl").string(), "--mock", src("data/fixtures/transcripts/rare_ticl2.jsonl")});
    REQUIRE(r.code == 0);
  }
  for (const auto* f : {"predictions-T-ICL2.jsonl", "llm-details-T-ICL2.jsonl", "train.jsonl", "test.jsonl"})
    CHECK(testing::slurp(a / f) == testing::slurp(b / f));
  const auto r = cli({"evaluate", "--config", src("data/fixtures/configs/ticl2.toml"), "--out", a.path().string(),
                      "--gold", (a / "rare.jsonl").string(), "--pred", (a / "predictions-T-ICL2.jsonl").string()});
  REQUIRE(r.code == 0);
  const auto results = nlohmann::json::parse(testing::slurp(a / "results.json"));
  CHECK(results[0]["technique"]["recall"].get<double>() == doctest::Approx(1.0));
  CHECK(results[0]["technique"]["precision"].get<double>() == doctest::Approx(10.0 / 14.0));
}

TEST_CASE("exit codes") {
  testing::TempDir dir;
  const std::string out = dir.path().string();
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"split", "--no-such-flag"}).code == 1);
  CHECK(cli({}).code == 1);
  CHECK(cli({"--version"}).code == 0);
  CHECK(cli({"--version"}).out.find(kVersion) != std::string::npos);
  const auto missing = cli({"split", "--out", out, "--in", (dir / "missing.jsonl").string()});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("error:") != std::string::npos);
  CHECK(cli({"train", "--out", out, "--train", src("data/fixtures/corpus/labels.csv"), "--model", "knn"}).code == 1);

  prepare(dir);
  testing::spit(dir / "short.jsonl", "{\"ordinal\": 1, \"reply\": \"TECHNIQUES: T1059.001\"}\n");
  const auto exhausted = cli({"llm-label", "--config", src("data/fixtures/configs/icl0.toml"), "--out", out, "--in",
                              (dir / "rare.jsonl").string(), "--mock", (dir / "short.jsonl").string()});
  CHECK(exhausted.code == 2);
  CHECK(exhausted.err.find("exhausted") != std::string::npos);
}

TEST_CASE("labeling failures are recorded per rule unless strict") {
  testing::TempDir dir;
  prepare(dir);
  const std::string out = dir.path().string(), cfg = src("data/fixtures/configs/icl0.toml");
  std::string transcript;
  for (int i = 1; i <= 10; ++i)
    transcript += "{\"ordinal\": " + std::to_string(i) + ", " +
                  (i == 3 ? std::string("\"error\": \"503\"}") : std::string("\"reply\": \"TECHNIQUES: T1486\"}")) +
                  "\n";
  testing::spit(dir / "faulty.jsonl", transcript);
  // icl0.toml keeps the default retry count, so ordinal 4 answers the retry.
  CHECK(cli({"llm-label", "--config", cfg, "--out", out, "--in", (dir / "rare.jsonl").string(), "--mock",
             (dir / "faulty.jsonl").string()})
            .code == 2);

  std::string dead;
  for (int i = 1; i <= 10; ++i) dead += "{\"ordinal\": " + std::to_string(i) + ", \"error\": \"down\"}\n";
  for (int i = 11; i <= 20; ++i) dead += "{\"ordinal\": " + std::to_string(i) + ", \"reply\": \"TECHNIQUES: T1486\"}\n";
  // Four attempts per rule: rules 1 and 2 fail, rule 3 succeeds on ordinal 11.
  testing::spit(dir / "dead.jsonl", dead);
  const auto lenient = cli({"llm-label", "--config", cfg, "--out", out, "--in", (dir / "rare.jsonl").string(),
                            "--mock", (dir / "dead.jsonl").string()});
  REQUIRE(lenient.code == 0);
  const auto details = testing::slurp(dir / "llm-details-ICL0.jsonl");
  CHECK(details.find("\"error\"") != std::string::npos);
  CHECK(lenient.out.find("(2 failed)") != std::string::npos);
  CHECK(cli({"llm-label", "--config", cfg, "--out", out, "--in", (dir / "rare.jsonl").string(), "--mock",
             (dir / "dead.jsonl").string(), "--strict"})
            .code == 2);
}

TEST_CASE("manifest records hashed inputs and outputs without clock values") {
  testing::TempDir dir;
  const auto rules = src("data/fixtures/corpus/community.rules");
  const auto before = sha256_hex(testing::slurp(rules));
  prepare(dir);
  CHECK(sha256_hex(testing::slurp(rules)) == before);
  const auto lines = manifest_lines(dir.path());
  REQUIRE(lines.size() == 2);
  const auto& ingest = lines[0];
  CHECK(ingest["command"] == "ingest");
  CHECK(ingest["inputs"]["rules"]["sha256"] == before);
  CHECK(ingest["outputs"]["dataset"]["sha256"] == sha256_hex(testing::slurp(dir / "dataset.jsonl")));
  CHECK(ingest["versions"]["nidslabel"] == kVersion);
  CHECK(ingest["versions"]["catalog"] == testing::fixture_catalog().version());
  CHECK(lines[1]["command"] == "split");
  CHECK(lines[1]["seeds"]["split"] == 7);
  const auto text = testing::slurp(dir / "manifest.jsonl");
  for (const auto* banned : {"time", "date", "clock"}) CHECK(text.find(banned) == std::string::npos);
}

TEST_CASE("outputs never overwrite inputs") {
  testing::TempDir dir;
  prepare(dir);
  const auto before = testing::slurp(dir / "train.jsonl");
  const auto r = cli({"split", "--config", src("data/fixtures/configs/ticl2.toml"), "--out", dir.path().string(),
                      "--in", (dir / "train.jsonl").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("refusing to overwrite") != std::string::npos);
  CHECK(testing::slurp(dir / "train.jsonl") == before);
}

TEST_CASE("catalog check") {
  testing::TempDir dir;
  const auto r = cli({"catalog", "check", "--catalog", testing::catalog_path().string(), "--out", dir.path().string()});
  REQUIRE(r.code == 0);
  CHECK(r.out == "catalog " + testing::fixture_catalog().version() +
                     ": 30 techniques (7 sub-techniques, 1 deprecated), 12 tactics\n");
  CHECK(cli({"catalog", "check", "--out", dir.path().string()}).code == 1);
  testing::spit(dir / "bad.json", "{\"version\": \"x\", \"entries\": [{\"technique_id\": \"T1\"}]}");
  CHECK(cli({"catalog", "check", "--catalog", (dir / "bad.json").string(), "--out", dir.path().string()}).code == 1);
}

TEST_CASE("prompt-search through the CLI") {
  testing::TempDir dir;
  prepare(dir);
  std::string transcript;
  const auto rare = load_jsonl(dir / "rare.jsonl");
  // Two candidates over the 10 rare rules: the first answers with gold labels, the second with nothing.
  std::size_t ord = 0;
  for (const auto& r : rare.rules()) {
    std::string ids;
    for (const auto& t : r.technique_ids) ids += (ids.empty() ? "" : ", ") + t.str();
    transcript += "{\"ordinal\": " + std::to_string(++ord) + ", \"reply\": \"TECHNIQUES: " + ids + "\"}\n";
  }
  for (std::size_t i = 0; i < rare.size(); ++i)
    transcript += "{\"ordinal\": " + std::to_string(++ord) + ", \"reply\": \"TECHNIQUES: none\"}\n";
  testing::spit(dir / "search.jsonl", transcript);
  const auto r = cli({"prompt-search", "--catalog", testing::catalog_path().string(), "--out", dir.path().string(),
                      "--dev", (dir / "rare.jsonl").string(), "--candidate", src("data/fixtures/configs/icl0.toml"),
                      "--candidate", src("data/fixtures/configs/ticl0_cq.toml"), "--mock",
                      (dir / "search.jsonl").string()});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(testing::slurp(dir / "prompt_search.json"));
  CHECK(doc["best"] == "ICL0");
  CHECK(doc["ranked"][0]["f1"].get<double>() == doctest::Approx(1.0));
  CHECK(doc["ranked"][1]["name"] == "T-ICL0+CQ");
  CHECK(doc["ranked"][1]["f1"].get<double>() == 0.0);
}

TEST_CASE("key/value config parsing") {
  const auto doc = KeyValueDoc::parse(R"(# comment
top = 1
[a]
s = "x \"q\" \\ y"   # trailing
b = true
i = -42
d = 2.5
)");
  CHECK(doc.get_int("top") == 1);
  CHECK(doc.get_string("a.s") == "x \"q\" \\ y");
  CHECK(doc.get_bool("a.b") == true);
  CHECK(doc.get_int("a.i") == -42);
  CHECK(doc.get_double("a.d") == 2.5);
  CHECK(doc.get_double("a.i") == -42.0);
  CHECK(!doc.get_string("a.missing"));
  CHECK_THROWS_AS(doc.get_int("a.s"), ValidationError);
  CHECK_THROWS_AS(KeyValueDoc::parse("x = 1\nx = 2"), ParseError);
  CHECK_THROWS_AS(KeyValueDoc::parse("[open"), ParseError);
  CHECK_THROWS_AS(KeyValueDoc::parse("x = \"unterminated"), ParseError);
  CHECK_THROWS_AS(KeyValueDoc::parse("novalue"), ParseError);
  CHECK_THROWS_AS(KeyValueDoc::load("/nonexistent/x.toml"), ValidationError);
}

TEST_CASE("app config mapping") {
  const auto cfg = load_app_config(testing::source_path("data/fixtures/configs/ticl2.toml"));
  REQUIRE(cfg.catalog_path);
  CHECK(fs::equivalent(*cfg.catalog_path, testing::catalog_path()));
  CHECK(cfg.split.seed == 7);
  CHECK(cfg.prompt.display_name() == "T-ICL2");
  CHECK(cfg.prompt.icl_count == 2);
  CHECK(cfg.retry.max_retries == 2);
  CHECK(cfg.retry.base_backoff.count() == 0);
  CHECK(cfg.provider.model == "gpt-4o");

  const auto cq = load_app_config(testing::source_path("data/fixtures/configs/ticl0_cq.toml"));
  REQUIRE(cq.prompt.competition);
  CHECK(cq.prompt.competition->batch_count == 11);
  CHECK(cq.prompt.competition->rounds == 3);

  const auto svm = load_app_config(testing::source_path("data/fixtures/configs/svm.toml"));
  CHECK(svm.threshold_policy == ThresholdPolicy::top1_fallback);

  CHECK_THROWS_AS(app_config_from(KeyValueDoc::parse("[classifier]\nkernel = \"rbf\"")), ValidationError);
  CHECK_THROWS_AS(app_config_from(KeyValueDoc::parse("[prompt]\nrounds = 2")), ValidationError);
  CHECK_THROWS_AS(app_config_from(KeyValueDoc::parse("[split]\nseed = \"x\"")), ValidationError);
  CHECK_THROWS_AS(app_config_from(KeyValueDoc::parse("[classifier]\nmodel = \"knn\"")), ValidationError);
  const auto example = load_app_config(testing::source_path("configs/example.toml"));
  CHECK(example.hyperparams == Hyperparams{});
  CHECK(example.prompt.display_name() == "T-ICL0");
  CHECK(fs::equivalent(*example.catalog_path, testing::catalog_path()));

  const auto rel = app_config_from(KeyValueDoc::parse("[data]\nrules = \"r.rules\""), "/base");
  CHECK(*rel.rules_path == fs::path("/base/r.rules"));
}
