#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "toxfair/corpus.hpp"
#include "toxfair/metrics.hpp"
#include "toxfair/models.hpp"
#include "toxfair/rebalance.hpp"
#include "toxfair/report.hpp"
#include "toxfair/textproc.hpp"

namespace toxfair {

std::string_view version() noexcept;

enum class FeatureKind { kTfIdf, kEmbedSum, kEmbedSeq };

std::string to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& name);

/// Input files. Empty strings mean "not supplied". Relative paths in a config
/// file are resolved against the file's directory.
struct DataPaths {
  std::string comments;
  std::string embeddings;
  std::string templates;
  std::string identity_terms;
  std::string slur_terms;
  std::string tweets;
  std::string external_scores;
};

struct RebalanceConfig {
  /// Train on the split as-is when disabled.
  bool enabled = false;
  CategoryTargets targets{};
  /// Synthetic comments generated per synthesizable category.
  std::size_t synthetic_per_category = 0;
};

struct SweepConfig {
  Category category = Category::kToxicIdentity;
  std::size_t from = 0;
  std::size_t to = 0;
  std::size_t step = 1;
};

struct ExperimentConfig {
  DataPaths paths;
  CommentSchema schema;
  double sample_fraction = 1.0;
  SplitFractions split;
  LabelingOptions labeling;

  FeatureKind features = FeatureKind::kTfIdf;
  std::size_t min_df = 1;
  std::size_t embed_dim = 25;
  OovPolicy oov_policy = OovPolicy::kZero;

  ModelKind model = ModelKind::kLogistic;
  double nb_alpha = 1.0;
  GradientModelConfig gradient;
  BiLstmConfig bilstm;

  RebalanceConfig rebalance;
  std::optional<SweepConfig> sweep;

  double threshold = 0.5;
  double external_threshold = 0.5;
  std::uint64_t seed = 1;
  /// Seed for sampling and splitting; follows `seed` when unset. Sweeps pin
  /// it so every point shares one test set.
  std::optional<std::uint64_t> split_seed;
  std::string output_dir = "runs/latest";

  std::uint64_t effective_split_seed() const noexcept { return split_seed.value_or(seed); }

  /// Throws ConfigError on inconsistent settings. With check_paths, every
  /// path the run will read must exist.
  void validate(bool check_paths) const;
};

/// Parses a config document. Unknown keys are rejected so typos surface.
/// Throws ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every setting, defaults included.
nlohmann::json to_json(const ExperimentConfig& config);

/// 16 hex digits of FNV-1a over the compact dump of the effective config.
std::string config_hash(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Pipeline stages

/// Parsed, labeled, sampled and split corpus.
struct PreparedData {
  DatasetSplit split;
  std::size_t parsed_rows = 0;
  std::size_t sampled_rows = 0;
  CorpusStats stats;  // over the sampled rows
};

PreparedData prepare_data(const ExperimentConfig& config);

/// The examples a model is fitted on, with provenance for the manifest.
struct TrainingSet {
  std::vector<LabeledExample> examples;
  /// Unannotated rows dropped by rebalancing.
  std::size_t excluded_unannotated = 0;
  std::size_t synthetic_generated = 0;
  bool rebalanced = false;
};

/// The train split when rebalancing is off; otherwise pools of real plus
/// synthetic examples sampled to the configured targets.
TrainingSet build_training_set(const ExperimentConfig& config, const std::vector<LabeledExample>& train);

/// Fitted featurizer: a TF-IDF model or an embedding table.
class Featurizer {
 public:
  static Featurizer fit(const ExperimentConfig& config, const std::vector<LabeledExample>& train);

  /// Input in the form the configured model consumes.
  ModelInput transform(const std::vector<LabeledExample>& examples, ModelKind model) const;
  /// Feature matrix for gradient models (TF-IDF rows or summed embeddings).
  FeatureMatrix matrix(const std::vector<LabeledExample>& examples) const;

  std::size_t dimension() const;
  FeatureKind kind() const noexcept { return kind_; }

  /// features.json: kind plus the TF-IDF artifact or the embedding settings.
  nlohmann::json to_json() const;
  static Featurizer from_json(const nlohmann::json& j, const ExperimentConfig& config);

 private:
  FeatureKind kind_ = FeatureKind::kTfIdf;
  std::optional<TfIdfModel> tfidf_;
  std::optional<EmbeddingTable> embeddings_;
  std::size_t max_len_ = 200;
};

TrainedModel train_model(const ExperimentConfig& config, const Featurizer& featurizer, const TrainingSet& train,
                         const std::vector<LabeledExample>& validation);

FairnessReport evaluate_model(const ExperimentConfig& config, const Featurizer& featurizer,
                              const TrainedModel& model, const std::vector<LabeledExample>& test);

// ---------------------------------------------------------------------------
// Runs

struct RunResult {
  FairnessReport report;
  nlohmann::json manifest;
  std::string test_fingerprint;
  std::size_t training_examples = 0;
};

/// prepare -> rebalance (train only) -> featurize -> fit -> evaluate, with
/// every artifact written to config.output_dir. Outputs are staged and moved
/// into place only on success; the manifest is written last. Errors carry
/// the stage name in their message.
RunResult run_experiment(const ExperimentConfig& config);
/// Same, reusing already prepared data.
RunResult run_experiment(const ExperimentConfig& config, const PreparedData& data);

/// Re-scores the test split of `config` with the model saved in model_dir and
/// writes evaluation.json and evaluation.csv under config.output_dir.
FairnessReport evaluate_saved(const ExperimentConfig& config, const std::filesystem::path& model_dir);

struct SweepPoint {
  std::size_t index = 0;
  CategoryTargets targets{};
  std::optional<RunResult> result;
  std::string error;
};

struct SweepResult {
  SweepSchedule schedule;
  std::vector<SweepPoint> points;
  std::size_t failures() const;
};

/// One full run per schedule point under output_dir/point-NN. The split uses
/// the base seed; point i rebalances and trains with seed + i. Point
/// failures are recorded and the sweep continues. Writes sweep.csv.
SweepResult run_sweep(const ExperimentConfig& config);

/// Loads a trained run directory and scores the identity-filtered tweets
/// against the external scores file. Writes comparison.json and
/// comparison.csv under config.output_dir.
ExternalComparison compare_external(const ExperimentConfig& config, const std::filesystem::path& model_dir);

/// Reads an `id,score` CSV.
std::map<std::string, double> read_external_scores(std::istream& in);

/// Rewrites report.csv (run directory) or sweep.csv (sweep directory) from
/// the JSON already on disk. Returns the files written.
std::vector<std::filesystem::path> rerender_reports(const std::filesystem::path& dir);

}  // namespace toxfair
