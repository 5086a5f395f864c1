#pragma once

#include <optional>
#include <string>

#include "toxfair/experiment.hpp"

namespace toxfair::cli {

/// Flags shared by every config-driven subcommand.
struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> sample_fraction;
  bool print_effective_config = false;
};

/// Config file (or defaults) with command-line overrides applied.
ExperimentConfig effective_config(const CommonOptions& common);

struct SynthOptions {
  bool demo_corpus = false;
  std::size_t comments = 30000;
  std::size_t tweets = 400;
  std::size_t per_category = 0;
  std::string identity_terms;
  std::string slur_terms;
  std::string templates;
};

int cmd_prepare(const CommonOptions& common);
int cmd_synth(const CommonOptions& common, const SynthOptions& options);
int cmd_train(const CommonOptions& common);
int cmd_evaluate(const CommonOptions& common, const std::string& model_dir);
int cmd_sweep(const CommonOptions& common);
int cmd_compare_external(const CommonOptions& common, const std::string& model_dir);
int cmd_report(const std::string& dir);

}  // namespace toxfair::cli
