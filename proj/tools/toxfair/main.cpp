// Command-line front end. Exit codes: 0 ok, 2 config error, 3 data error,
// 4 training divergence, 5 partial sweep failure, 1 anything else.
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "toxfair/error.hpp"

namespace {

void add_common(CLI::App* cmd, toxfair::cli::CommonOptions& common) {
  cmd->add_option("--config", common.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", common.seed, "Override the config seed");
  cmd->add_option("--out", common.out, "Override the output directory");
  cmd->add_option("--sample-fraction", common.sample_fraction, "Override the corpus sample fraction")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_flag("--print-effective-config", common.print_effective_config,
                "Print the config with defaults and overrides merged, then exit");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = toxfair::cli;
  CLI::App app{"Fairness-aware toxic comment classification experiments"};
  app.set_version_flag("--version", std::string(toxfair::version()));
  app.require_subcommand(1);

  cli::CommonOptions common;
  cli::SynthOptions synth;
  std::string model_dir;
  std::string report_dir;

  auto* prepare = app.add_subcommand("prepare", "Parse, label and split the corpus; write fingerprints");
  add_common(prepare, common);

  auto* synth_cmd = app.add_subcommand("synth", "Expand templates, or write the bundled demo data set");
  add_common(synth_cmd, common);
  synth_cmd->add_flag("--demo-corpus", synth.demo_corpus,
                      "Write a planted-bias comment corpus, embeddings, tweets and external scores");
  synth_cmd->add_option("--comments", synth.comments, "Demo corpus size")->capture_default_str();
  synth_cmd->add_option("--tweets", synth.tweets, "Demo tweet count")->capture_default_str();
  synth_cmd->add_option("--per-category", synth.per_category,
                        "Synthetic comments per category (default: rebalance.synthetic_per_category)");
  synth_cmd->add_option("--identity-terms", synth.identity_terms, "Identity term list (overrides config)");
  synth_cmd->add_option("--slur-terms", synth.slur_terms, "Slur placeholder list (overrides config)");
  synth_cmd->add_option("--templates", synth.templates, "Template file (overrides config)");

  auto* train = app.add_subcommand("train", "Train and evaluate one configuration");
  add_common(train, common);

  auto* evaluate = app.add_subcommand("evaluate", "Score the test split with a saved model");
  add_common(evaluate, common);
  evaluate->add_option("--model", model_dir, "Run directory holding model.bin and features.json")->required();

  auto* sweep = app.add_subcommand("sweep", "Incremental rebalancing sweep over one category");
  add_common(sweep, common);

  auto* compare = app.add_subcommand("compare-external", "Compare against precomputed external scores");
  add_common(compare, common);
  compare->add_option("--model", model_dir, "Run directory holding model.bin and features.json")->required();

  auto* report = app.add_subcommand("report", "Re-render CSV reports from a run or sweep directory");
  report->add_option("dir", report_dir, "Run or sweep directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*prepare) return cli::cmd_prepare(common);
    if (*synth_cmd) return cli::cmd_synth(common, synth);
    if (*train) return cli::cmd_train(common);
    if (*evaluate) return cli::cmd_evaluate(common, model_dir);
    if (*sweep) return cli::cmd_sweep(common);
    if (*compare) return cli::cmd_compare_external(common, model_dir);
    if (*report) return cli::cmd_report(report_dir);
  } catch (const toxfair::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const toxfair::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const toxfair::DomainError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const toxfair::DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
