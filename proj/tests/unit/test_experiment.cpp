#include <fstream>
#include <sstream>

#include "demo_workspace.hpp"
#include "doctest.h"
#include "test_support.hpp"
#include "toxfair/error.hpp"
#include "toxfair/experiment.hpp"

using namespace toxfair;
using toxfair::testing::read_file;
using toxfair::testing::TempDir;
using toxfair::testing::write_file;
namespace fs = std::filesystem;
using nlohmann::json;

TEST_CASE("config parsing fills defaults and resolves relative paths") {
  const json j = {{"paths", {{"comments", "data/c.csv"}, {"embeddings", "/abs/e.txt"}}},
                  {"model", {{"kind", "mlp"}}},
                  {"seed", 11}};
  const auto c = config_from_json(j, "/base");
  CHECK(c.paths.comments == "/base/data/c.csv");
  CHECK(c.paths.embeddings == "/abs/e.txt");
  CHECK(c.model == ModelKind::kMlp);
  CHECK(c.gradient.hidden == std::vector<std::size_t>{100});
  CHECK(c.seed == 11);
  CHECK(c.effective_split_seed() == 11);
  CHECK(c.output_dir == "runs/latest");

  const auto lstm = config_from_json({{"model", {{"kind", "bilstm"}}}});
  CHECK(lstm.bilstm.optimizer.kind == OptimizerKind::kAdam);
}

TEST_CASE("unknown keys and bad values are configuration errors") {
  CHECK_THROWS_AS(config_from_json({{"sed", 1}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"model", {{"kind", "logistic"}, {"lr", 0.1}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"model", {{"kind", "forest"}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"seed", "seven"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"features", {{"oov", "maybe"}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"rebalance", {{"targets", {{"toxic", 5}}}}}}), ConfigError);
}

TEST_CASE("validation catches inconsistent settings") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate(false));
  CHECK_THROWS_AS(c.validate(true), ConfigError);  // no comments path

  auto bad = c;
  bad.sample_fraction = 0.0;
  CHECK_THROWS_AS(bad.validate(false), ConfigError);
  bad = c;
  bad.split = {0.5, 0.2, 0.2};
  CHECK_THROWS_AS(bad.validate(false), ConfigError);
  bad = c;
  bad.model = ModelKind::kBiLstm;
  CHECK_THROWS_AS(bad.validate(false), ConfigError);  // needs embed_seq
  bad = c;
  bad.model = ModelKind::kNaiveBayes;
  bad.features = FeatureKind::kEmbedSum;
  CHECK_THROWS_AS(bad.validate(false), ConfigError);
  bad = c;
  bad.features = FeatureKind::kEmbedSum;
  CHECK_THROWS_AS(bad.validate(false), ConfigError);  // no embeddings path
  bad = c;
  bad.sweep = SweepConfig{Category::kToxicIdentity, 0, 10, 3};
  CHECK_THROWS_AS(bad.validate(false), ConfigError);
  bad = c;
  bad.paths.comments = "/definitely/not/here.csv";
  CHECK_THROWS_AS(bad.validate(true), ConfigError);
}

TEST_CASE("effective config round-trips and hashes stably") {
  ExperimentConfig c;
  c.paths.comments = "/x/c.csv";
  c.model = ModelKind::kMlp;
  c.gradient.hidden = {75, 50};
  c.sweep = SweepConfig{Category::kNonToxicIdentity, 0, 100, 50};
  c.split_seed = 3;
  const json j = to_json(c);
  const auto back = config_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c).size() == 16);
  c.seed += 1;
  CHECK(config_hash(back) != config_hash(c));
}

TEST_CASE("load_config accepts comments and reports unreadable files") {
  TempDir dir;
  write_file(dir / "c.json", "{\n  // a comment\n  \"seed\": 4, \"paths\": {\"comments\": \"c.csv\"}\n}\n");
  const auto c = load_config(dir / "c.json");
  CHECK(c.seed == 4);
  CHECK(c.paths.comments == (dir / "c.csv").string());
  write_file(dir / "bad.json", "{ nope");
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
}

TEST_CASE("a run writes every artifact and reruns byte-identically") {
  TempDir dir;
  auto config = toxfair::testing::make_demo_workspace(dir.path(), 1500);
  const auto result = run_experiment(config);
  const fs::path out = config.output_dir;
  for (const char* f : {"config.json", "report.json", "report.csv", "history.csv", "training_manifest.csv",
                        "features.json", "model.bin", "manifest.json"}) {
    CHECK_MESSAGE(fs::exists(out / f), f);
  }
  CHECK_FALSE(fs::exists(out.string() + ".staging"));
  CHECK(result.report.auc_defined);
  CHECK(result.report.auc > 0.6);

  const json manifest = json::parse(read_file(out / "manifest.json"));
  CHECK(manifest["config_hash"] == config_hash(config));
  CHECK(manifest["artifacts"]["report_json"] == "report.json");
  CHECK(manifest["artifacts"]["report_csv"] == "report.csv");
  CHECK(manifest["fingerprints"]["test"] == result.test_fingerprint);
  CHECK(manifest["counts"]["training_set"] == result.training_examples);
  CHECK(manifest.contains("timings_ms"));

  const auto first_report = read_file(out / "report.json");
  const auto first_model = read_file(out / "model.bin");
  run_experiment(config);
  CHECK(read_file(out / "report.json") == first_report);
  CHECK(read_file(out / "model.bin") == first_model);
  CHECK(read_file(out / "report.json").find("timings") == std::string::npos);

  SUBCASE("reports re-render from JSON and refuse an edited config") {
    const auto csv = read_file(out / "report.csv");
    fs::remove(out / "report.csv");
    const auto written = rerender_reports(out);
    REQUIRE(written.size() == 1);
    CHECK(read_file(out / "report.csv") == csv);
    auto stored = json::parse(read_file(out / "config.json"));
    stored["seed"] = 99;
    write_file(out / "config.json", stored.dump(2));
    CHECK_THROWS_AS(rerender_reports(out), DataError);
  }

  SUBCASE("evaluate a saved model on the same split") {
    auto eval_config = config;
    eval_config.output_dir = (dir / "eval").string();
    const auto report = evaluate_saved(eval_config, out);
    CHECK(report.auc == result.report.auc);
    const json e = json::parse(read_file(dir / "eval" / "evaluation.json"));
    CHECK(e["test_fingerprint"] == result.test_fingerprint);
  }

  SUBCASE("compare against external scores") {
    auto cmp = config;
    cmp.output_dir = (dir / "cmp").string();
    const auto c = compare_external(cmp, out);
    CHECK(c.total > 0);
    CHECK(c.ours_only.size() + c.theirs_only.size() + c.both.size() <= c.total);
    CHECK(fs::exists(dir / "cmp" / "comparison.json"));
    CHECK(fs::exists(dir / "cmp" / "comparison.csv"));

    write_file(dir / "partial.csv", "id,score\n1,0.5\n");
    cmp.paths.external_scores = (dir / "partial.csv").string();
    CHECK_THROWS_AS(compare_external(cmp, out), DataError);
  }
}

TEST_CASE("rebalanced training uses the configured category targets") {
  TempDir dir;
  auto config = toxfair::testing::make_demo_workspace(dir.path(), 1500);
  config.rebalance.enabled = true;
  config.rebalance.targets = {150, 150, 150, 150};
  config.rebalance.synthetic_per_category = 100;
  const auto result = run_experiment(config);
  CHECK(result.training_examples == 600);
  const auto manifest_csv = read_file(fs::path(config.output_dir) / "training_manifest.csv");
  CHECK(manifest_csv.find(",synthetic,") != std::string::npos);
  const json m = json::parse(read_file(fs::path(config.output_dir) / "manifest.json"));
  CHECK(m["counts"]["training_categories"]["toxic_identity"] == 150);
  CHECK(m["counts"]["synthetic_generated"] == 300);
}

TEST_CASE("each model and feature kind trains end to end") {
  TempDir dir;
  auto base = toxfair::testing::make_demo_workspace(dir.path(), 800);
  base.gradient.epochs = 2;
  struct Combo {
    ModelKind model;
    FeatureKind features;
  };
  for (const auto& [model, features] : {Combo{ModelKind::kNaiveBayes, FeatureKind::kTfIdf},
                                        Combo{ModelKind::kMlp, FeatureKind::kTfIdf},
                                        Combo{ModelKind::kLogistic, FeatureKind::kEmbedSum},
                                        Combo{ModelKind::kBiLstm, FeatureKind::kEmbedSeq}}) {
    CAPTURE(to_string(model));
    auto c = base;
    c.model = model;
    c.features = features;
    c.gradient.hidden = model == ModelKind::kMlp ? std::vector<std::size_t>{8} : std::vector<std::size_t>{};
    c.split = {0.7, 0.1, 0.2};
    c.bilstm.hidden_units = 4;
    c.bilstm.head_hidden = 4;
    c.bilstm.max_len = 12;
    c.bilstm.epochs = 1;
    c.bilstm.batch_size = 64;
    c.bilstm.optimizer = {OptimizerKind::kAdam, 0.01};
    c.oov_policy = OovPolicy::kUnknownVector;
    c.output_dir = (dir / ("run-" + to_string(model))).string();
    const auto r = run_experiment(c);
    CHECK(r.report.confusion.total() > 0);
    // The saved featurizer reproduces the scores.
    auto eval = c;
    eval.output_dir = (dir / ("eval-" + to_string(model))).string();
    CHECK(evaluate_saved(eval, c.output_dir).auc == r.report.auc);
  }
}

TEST_CASE("failed runs leave no partial output and keep their error type") {
  TempDir dir;
  auto config = toxfair::testing::make_demo_workspace(dir.path(), 300);
  write_file(dir / "broken.csv", "id,comment_text,target\n1,fine,0.2\n2,bad,7\n");
  config.paths.comments = (dir / "broken.csv").string();
  try {
    run_experiment(config);
    FAIL("expected RowError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).rfind("prepare: ", 0) == 0);
  }
  CHECK_FALSE(fs::exists(config.output_dir));
  CHECK_FALSE(fs::exists(config.output_dir + ".staging"));

  auto empty_pool = toxfair::testing::make_demo_workspace(dir.path(), 300);
  empty_pool.rebalance.enabled = true;
  empty_pool.rebalance.targets = {10, 10, 10, 10};
  empty_pool.paths.comments = (dir / "no_identity.csv").string();
  write_file(dir / "no_identity.csv",
             "id,comment_text,target,female\n1,a b,0.9,0\n2,c d,0.1,0\n3,e f,0.1,0\n4,g h,0.8,0\n5,i j,0.2,0\n");
  try {
    run_experiment(empty_pool);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("rebalance: ") == 0);
  }
  CHECK_FALSE(fs::exists(empty_pool.output_dir));
}

TEST_CASE("sweeps share one test split and record failing points") {
  TempDir dir;
  auto config = toxfair::testing::make_demo_workspace(dir.path(), 1200);
  config.gradient.epochs = 3;
  config.rebalance.enabled = true;
  config.rebalance.targets = {0, 150, 150, 150};
  config.sweep = SweepConfig{Category::kToxicIdentity, 0, 100, 50};
  const auto result = run_sweep(config);
  REQUIRE(result.points.size() == 3);
  CHECK(result.failures() == 0);
  const auto fp = result.points[0].result->test_fingerprint;
  for (const auto& p : result.points) CHECK(p.result->test_fingerprint == fp);
  CHECK(result.points[2].result->training_examples == 550);
  const fs::path out = config.output_dir;
  CHECK(fs::exists(out / "point-02" / "report.json"));
  const json sweep = json::parse(read_file(out / "sweep.json"));
  CHECK(sweep["fixed_targets"]["toxic_non_identity"] == 150);
  CHECK(sweep["points"][1]["seed"] == config.seed + 1);

  const auto csv = read_file(out / "sweep.csv");
  fs::remove(out / "sweep.csv");
  rerender_reports(out);
  CHECK(read_file(out / "sweep.csv") == csv);

  // No toxic identity rows and no synthesis: every point with a positive target fails.
  write_file(dir / "no_ti.csv",
             "id,comment_text,target,female\n1,a b,0.9,0\n2,c d,0.1,0\n3,e f,0.1,1\n4,g h,0.8,0\n"
             "5,i j,0.2,0\n6,k l,0.1,1\n7,m n,0.9,0\n8,o p,0.1,0\n9,q r,0.2,1\n10,s t,0.7,0\n");
  auto failing = config;
  failing.paths.comments = (dir / "no_ti.csv").string();
  failing.rebalance.targets = {0, 2, 2, 2};
  failing.sweep = SweepConfig{Category::kToxicIdentity, 0, 2, 1};
  failing.output_dir = (dir / "failing").string();
  const auto partial = run_sweep(failing);
  CHECK(partial.failures() == 2);
  CHECK(partial.points[0].result.has_value());
  CHECK(partial.points[1].error.find("toxic_identity") != std::string::npos);
  const json fj = json::parse(read_file(dir / "failing" / "sweep.json"));
  CHECK(fj["failures"] == 2);
  CHECK(fj["points"][2]["status"] == "failed");
}

TEST_CASE("external score files") {
  std::istringstream good("id,score\na,0.1\nb,1\n");
  const auto s = read_external_scores(good);
  CHECK(s.at("b") == 1.0);
  std::istringstream dup("id,score\na,0.1\na,0.2\n");
  CHECK_THROWS_AS(read_external_scores(dup), RowError);
  std::istringstream range("id,score\na,1.2\n");
  CHECK_THROWS_AS(read_external_scores(range), RowError);
  std::istringstream text("id,score\na,high\n");
  CHECK_THROWS_AS(read_external_scores(text), RowError);
  std::istringstream missing("id,value\n");
  CHECK_THROWS_AS(read_external_scores(missing), SchemaError);
}
