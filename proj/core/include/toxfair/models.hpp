#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "toxfair/features.hpp"
#include "toxfair/numerics.hpp"

namespace toxfair {

/// Dense or sparse design matrix.
using FeatureMatrix = std::variant<Matrix, CsrMatrix>;

std::size_t feature_rows(const FeatureMatrix& x);
std::size_t feature_cols(const FeatureMatrix& x);
FeatureMatrix select_rows(const FeatureMatrix& x, std::span<const std::size_t> picked);

/// Everything a model can be asked to score.
using ModelInput = std::variant<Matrix, CsrMatrix, std::vector<SequenceFeature>>;

enum class ModelKind { kNaiveBayes, kLogistic, kMlp, kBiLstm };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

// ---------------------------------------------------------------------------
// Multinomial Naive Bayes

struct NaiveBayesModel {
  std::array<double, 2> log_prior{};
  /// ln((count(t, c) + alpha) / (total(c) + alpha * V)), one row per class.
  std::array<std::vector<double>, 2> log_likelihood;
  double alpha = 1.0;
};

/// counts: bag-of-words rows. Throws DomainError unless both classes occur.
NaiveBayesModel fit_naive_bayes(const CsrMatrix& counts, std::span<const int> labels, double alpha = 1.0);

struct NaiveBayesPrediction {
  int label = 0;
  /// Normalized log posteriors for classes 0 and 1.
  std::array<double, 2> log_posterior{};
};

/// argmax of ln prior + sum count * loglik; ties go to class 0.
NaiveBayesPrediction predict_naive_bayes(const NaiveBayesModel& model, const SparseVector& counts);

// ---------------------------------------------------------------------------
// Logistic regression and fully connected networks

struct GradientModelConfig {
  /// Empty hidden list means logistic regression with a single sigmoid
  /// output; otherwise ReLU layers of these widths feed two class scores
  /// trained with softmax cross-entropy.
  std::vector<std::size_t> hidden;
  std::size_t input_dim = 0;
  OptimizerConfig optimizer{OptimizerKind::kSgd, 1e-5};
  std::size_t batch_size = 512;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;

  bool is_logistic() const noexcept { return hidden.empty(); }
  std::size_t output_dim() const noexcept { return hidden.empty() ? 1 : 2; }
  void validate() const;
};

/// Parameter tensors in order W0, b0, W1, b1, ...; biases are 1 x width.
std::vector<Matrix> init_gradient_params(const GradientModelConfig& config, Rng& rng);

/// Mean training loss of one batch; fills grads (same layout as params)
/// when non-null.
double gradient_model_loss(const GradientModelConfig& config, std::span<const Matrix> params,
                           const FeatureMatrix& x, std::span<const int> labels, std::vector<Matrix>* grads);

/// Probability of the toxic class per row.
std::vector<double> gradient_model_proba(const GradientModelConfig& config, std::span<const Matrix> params,
                                         const FeatureMatrix& x);

// ---------------------------------------------------------------------------
// Two-layer bidirectional LSTM

struct BiLstmConfig {
  std::size_t embed_dim = 25;
  std::size_t max_len = 200;
  std::size_t hidden_units = 128;
  std::size_t layers = 2;
  double spatial_dropout = 0.3;
  std::size_t batch_size = 512;
  OptimizerConfig optimizer{OptimizerKind::kAdam, 1e-5};
  std::size_t epochs = 10;
  /// Width of the dense layer between the pooled features and the output.
  std::size_t head_hidden = 128;
  std::uint64_t seed = 0;

  /// Per-timestep width of a bidirectional layer's output.
  std::size_t layer_output_dim() const noexcept { return 2 * hidden_units; }
  /// Max-pool and mean-pool concatenated.
  std::size_t pooled_dim() const noexcept { return 4 * hidden_units; }
  void validate() const;
};

/// Tensors per layer and direction (forward then backward): W (in x 4H),
/// U (H x 4H), b (1 x 4H) with gates ordered input, forget, candidate,
/// output. Then the head: W1 (4H x head), b1, W2 (head x 1), b2.
std::vector<Matrix> init_bilstm_params(const BiLstmConfig& config, Rng& rng);
std::size_t bilstm_param_count(const BiLstmConfig& config);

/// Probabilities per sequence. Dropout is applied only in train mode, with
/// its channel masks drawn from dropout_seed.
std::vector<double> bilstm_forward(const BiLstmConfig& config, std::span<const Matrix> params,
                                   std::span<const SequenceFeature> batch, bool train_mode,
                                   std::uint64_t dropout_seed);

/// Mean BCE of one batch; fills grads when non-null.
double bilstm_loss(const BiLstmConfig& config, std::span<const Matrix> params,
                   std::span<const SequenceFeature> batch, std::span<const int> labels, bool train_mode,
                   std::uint64_t dropout_seed, std::vector<Matrix>* grads);

/// Hidden states (length x H) of one LSTM direction over the first `length`
/// rows of x. With reverse set the recurrence runs from row length-1 down to
/// 0 and row t of the result is the state at input position t.
Matrix lstm_direction(const Matrix& w, const Matrix& u, const Matrix& b, const Matrix& x, std::size_t length,
                      bool reverse);

// ---------------------------------------------------------------------------
// Trained models

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  std::optional<double> validation_f1;
};

struct TrainedModel {
  ModelKind kind = ModelKind::kLogistic;
  GradientModelConfig gradient;
  BiLstmConfig bilstm;
  double nb_alpha = 1.0;
  std::vector<Matrix> params;
  std::vector<EpochRecord> history;
  /// Epoch whose parameters were kept (highest validation F1, earliest on
  /// ties); the last epoch without validation data; 0 when untrained.
  std::size_t selected_epoch = 0;

  /// Format: magic "TXFM", u32 version, u64 header length, JSON header
  /// (kind, config, history), tensor blob.
  void save(std::ostream& out) const;
  static TrainedModel load(std::istream& in);
};

/// Validation rows for model selection.
struct ValidationSet {
  const FeatureMatrix* features = nullptr;
  std::span<const int> labels;
};

TrainedModel fit_gradient_model(const GradientModelConfig& config, const FeatureMatrix& x,
                                std::span<const int> labels, std::optional<ValidationSet> validation = {});

TrainedModel fit_bilstm(const BiLstmConfig& config, std::span<const SequenceFeature> train,
                        std::span<const int> train_labels, std::span<const SequenceFeature> validation,
                        std::span<const int> validation_labels);

TrainedModel wrap_naive_bayes(const NaiveBayesModel& model);
NaiveBayesModel unwrap_naive_bayes(const TrainedModel& model);

/// Toxic-class probabilities. Naive Bayes takes bag-of-words counts (CSR);
/// logistic and MLP take dense or sparse features; BiLSTM takes sequences.
/// Throws DomainError on a kind/input mismatch.
std::vector<double> predict_proba(const TrainedModel& model, const ModelInput& input);

/// label = 1 iff p >= threshold.
std::vector<int> classify(std::span<const double> probabilities, double threshold);

}  // namespace toxfair
