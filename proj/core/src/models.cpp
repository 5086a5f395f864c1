#include "toxfair/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <ostream>
#include <sstream>

#include "toxfair/error.hpp"
#include "toxfair/metrics.hpp"

namespace toxfair {

using nlohmann::json;

std::size_t feature_rows(const FeatureMatrix& x) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, Matrix>) {
          return m.rows();
        } else {
          return m.rows;
        }
      },
      x);
}

std::size_t feature_cols(const FeatureMatrix& x) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, Matrix>) {
          return m.cols();
        } else {
          return m.cols;
        }
      },
      x);
}

FeatureMatrix select_rows(const FeatureMatrix& x, std::span<const std::size_t> picked) {
  if (const auto* dense = std::get_if<Matrix>(&x)) return select_rows(*dense, picked);
  return std::get<CsrMatrix>(x).select_rows(picked);
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kNaiveBayes:
      return "naive_bayes";
    case ModelKind::kLogistic:
      return "logistic";
    case ModelKind::kMlp:
      return "mlp";
    case ModelKind::kBiLstm:
      return "bilstm";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  for (auto k : {ModelKind::kNaiveBayes, ModelKind::kLogistic, ModelKind::kMlp, ModelKind::kBiLstm}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown model kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// Naive Bayes

NaiveBayesModel fit_naive_bayes(const CsrMatrix& counts, std::span<const int> labels, double alpha) {
  if (counts.rows != labels.size()) throw ShapeError("fit_naive_bayes: rows and labels differ in length");
  if (!(alpha > 0.0)) throw ConfigError("Naive Bayes smoothing must be positive");
  std::array<std::size_t, 2> docs{};
  for (int y : labels) ++docs[y != 0 ? 1 : 0];
  if (docs[0] == 0 || docs[1] == 0) throw DomainError("Naive Bayes needs examples of both classes");

  const std::size_t vocab = counts.cols;
  std::array<std::vector<double>, 2> token_counts{std::vector<double>(vocab, 0.0), std::vector<double>(vocab, 0.0)};
  std::array<double, 2> totals{};
  for (std::size_t r = 0; r < counts.rows; ++r) {
    const int c = labels[r] != 0 ? 1 : 0;
    for (auto k = counts.row_offsets[r]; k < counts.row_offsets[r + 1]; ++k) {
      token_counts[c][counts.indices[k]] += counts.values[k];
      totals[c] += counts.values[k];
    }
  }
  NaiveBayesModel model;
  model.alpha = alpha;
  const double n = static_cast<double>(labels.size());
  for (int c = 0; c < 2; ++c) {
    model.log_prior[c] = std::log(static_cast<double>(docs[c]) / n);
    const double denom = totals[c] + alpha * static_cast<double>(vocab);
    model.log_likelihood[c].resize(vocab);
    for (std::size_t t = 0; t < vocab; ++t) {
      model.log_likelihood[c][t] = std::log((token_counts[c][t] + alpha) / denom);
    }
  }
  return model;
}

NaiveBayesPrediction predict_naive_bayes(const NaiveBayesModel& model, const SparseVector& counts) {
  std::array<double, 2> score = model.log_prior;
  for (int c = 0; c < 2; ++c) {
    const auto& ll = model.log_likelihood[c];
    for (std::size_t k = 0; k < counts.indices.size(); ++k) {
      if (counts.indices[k] >= ll.size()) throw ShapeError("Naive Bayes: token column outside vocabulary");
      score[c] += counts.values[k] * ll[counts.indices[k]];
    }
  }
  const double mx = std::max(score[0], score[1]);
  const double lse = mx + std::log(std::exp(score[0] - mx) + std::exp(score[1] - mx));
  NaiveBayesPrediction out;
  out.label = score[1] > score[0] ? 1 : 0;
  out.log_posterior = {score[0] - lse, score[1] - lse};
  return out;
}

// ---------------------------------------------------------------------------
// Logistic regression / MLP

void GradientModelConfig::validate() const {
  if (input_dim == 0) throw ConfigError("input_dim must be positive");
  if (std::any_of(hidden.begin(), hidden.end(), [](std::size_t h) { return h == 0; })) {
    throw ConfigError("hidden layer sizes must be positive");
  }
  if (!(optimizer.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
}

std::vector<Matrix> init_gradient_params(const GradientModelConfig& config, Rng& rng) {
  config.validate();
  std::vector<Matrix> params;
  std::size_t in = config.input_dim;
  std::vector<std::size_t> widths = config.hidden;
  widths.push_back(config.output_dim());
  for (std::size_t out : widths) {
    Matrix w(in, out);
    glorot_uniform(w, in, out, rng);
    params.push_back(std::move(w));
    params.emplace_back(1, out);
    in = out;
  }
  return params;
}

namespace {

Matrix first_layer(const FeatureMatrix& x, const Matrix& w, const Matrix& b) {
  return std::visit([&](const auto& m) { return affine(m, w, b.values()); }, x);
}

void first_layer_weight_grad(const FeatureMatrix& x, const Matrix& dz, Matrix& dw) {
  std::visit([&](const auto& m) { gemm_tn_acc(m, dz, dw); }, x);
}

void check_params(const GradientModelConfig& config, std::span<const Matrix> params) {
  const std::size_t layers = config.hidden.size() + 1;
  if (params.size() != 2 * layers) {
    throw ShapeError("expected " + std::to_string(2 * layers) + " parameter tensors, got " +
                     std::to_string(params.size()));
  }
}

// Forward pass keeping pre-activations for backprop. activations[0] is unused
// (the input may be sparse); activations[l] for l >= 1 is the input to layer l.
struct MlpTrace {
  std::vector<Matrix> pre;
  std::vector<Matrix> activations;
};

MlpTrace forward_trace(const GradientModelConfig& config, std::span<const Matrix> params, const FeatureMatrix& x) {
  check_params(config, params);
  if (feature_cols(x) != config.input_dim) {
    throw ShapeError("feature width " + std::to_string(feature_cols(x)) + " does not match input_dim " +
                     std::to_string(config.input_dim));
  }
  const std::size_t layers = config.hidden.size() + 1;
  MlpTrace trace;
  trace.activations.emplace_back();
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& w = params[2 * l];
    const Matrix& b = params[2 * l + 1];
    Matrix z = l == 0 ? first_layer(x, w, b) : affine(trace.activations[l], w, b.values());
    if (l + 1 < layers) trace.activations.push_back(relu(z));
    trace.pre.push_back(std::move(z));
  }
  return trace;
}

std::vector<double> labels_as_real(std::span<const int> labels) {
  std::vector<double> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] != 0 ? 1.0 : 0.0;
  return y;
}

}  // namespace

double gradient_model_loss(const GradientModelConfig& config, std::span<const Matrix> params, const FeatureMatrix& x,
                           std::span<const int> labels, std::vector<Matrix>* grads) {
  if (feature_rows(x) != labels.size()) throw ShapeError("gradient model: rows and labels differ in length");
  const MlpTrace trace = forward_trace(config, params, x);
  const std::size_t layers = config.hidden.size() + 1;
  const Matrix& out = trace.pre.back();

  double loss = 0.0;
  Matrix dz;
  if (config.is_logistic()) {
    const auto y = labels_as_real(labels);
    auto lg = bce_with_logits(out.values(), y);
    loss = lg.loss;
    dz = Matrix(out.rows(), 1, std::move(lg.grad));
  } else {
    std::vector<int> targets(labels.begin(), labels.end());
    for (auto& t : targets) t = t != 0 ? 1 : 0;
    loss = softmax_cross_entropy(out, targets, dz);
  }
  if (!grads) return loss;

  grads->clear();
  for (const auto& p : params) grads->emplace_back(p.rows(), p.cols());
  for (std::size_t l = layers; l-- > 0;) {
    Matrix& dw = (*grads)[2 * l];
    Matrix& db = (*grads)[2 * l + 1];
    column_sums_acc(dz, db.values());
    if (l == 0) {
      first_layer_weight_grad(x, dz, dw);
      break;
    }
    gemm_tn_acc(trace.activations[l], dz, dw);
    Matrix da(dz.rows(), params[2 * l].rows());
    gemm_nt_acc(dz, params[2 * l], da);
    const Matrix& pre = trace.pre[l - 1];
    for (std::size_t k = 0; k < da.size(); ++k) {
      if (!(pre.values()[k] > 0.0)) da.values()[k] = 0.0;
    }
    dz = std::move(da);
  }
  return loss;
}

std::vector<double> gradient_model_proba(const GradientModelConfig& config, std::span<const Matrix> params,
                                         const FeatureMatrix& x) {
  const MlpTrace trace = forward_trace(config, params, x);
  const Matrix& out = trace.pre.back();
  std::vector<double> p(out.rows());
  if (config.is_logistic()) {
    for (std::size_t i = 0; i < out.rows(); ++i) p[i] = sigmoid(out(i, 0));
  } else {
    const Matrix probs = softmax_rows(out);
    for (std::size_t i = 0; i < out.rows(); ++i) p[i] = probs(i, 1);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Training loops

namespace {

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                    std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(Rng::derive(seed, epoch));
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

double f1_at_half(std::span<const double> probs, std::span<const int> labels) {
  const auto predicted = classify(probs, 0.5);
  return precision_recall_f1(confusion(labels, predicted)).f1.value;
}

// Tracks the best validation F1 and the parameters that produced it.
struct Selector {
  double best_f1 = -1.0;
  std::size_t best_epoch = 0;
  std::vector<Matrix> best_params;

  void offer(std::size_t epoch, double f1, const std::vector<Matrix>& params) {
    if (f1 > best_f1) {
      best_f1 = f1;
      best_epoch = epoch;
      best_params = params;
    }
  }
};

}  // namespace

TrainedModel fit_gradient_model(const GradientModelConfig& config, const FeatureMatrix& x,
                                std::span<const int> labels, std::optional<ValidationSet> validation) {
  config.validate();
  if (feature_rows(x) != labels.size()) throw ShapeError("fit_gradient_model: rows and labels differ in length");
  if (validation && (!validation->features || feature_rows(*validation->features) != validation->labels.size())) {
    throw ShapeError("fit_gradient_model: validation rows and labels differ in length");
  }
  const bool use_validation = validation && !validation->labels.empty();

  TrainedModel model;
  model.kind = config.is_logistic() ? ModelKind::kLogistic : ModelKind::kMlp;
  model.gradient = config;
  Rng init_rng(Rng::derive(config.seed, 0xA11CE));
  model.params = init_gradient_params(config, init_rng);

  Optimizer optimizer(config.optimizer);
  Selector selector;
  std::vector<Matrix> grads;
  const std::size_t n = labels.size();
  std::vector<int> batch_labels;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    const auto batches = epoch_batches(n, config.batch_size, config.seed, epoch);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& idx = batches[b];
      const FeatureMatrix xb = select_rows(x, idx);
      batch_labels.resize(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) batch_labels[i] = labels[idx[i]];
      const double loss = gradient_model_loss(config, model.params, xb, batch_labels, &grads);
      if (!std::isfinite(loss)) throw DivergenceError(epoch, b + 1);
      loss_sum += loss * static_cast<double>(idx.size());
      optimizer.step(model.params, grads);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = n ? loss_sum / static_cast<double>(n) : 0.0;
    if (use_validation) {
      const auto probs = gradient_model_proba(config, model.params, *validation->features);
      rec.validation_f1 = f1_at_half(probs, validation->labels);
      selector.offer(epoch, *rec.validation_f1, model.params);
    }
    model.history.push_back(rec);
  }
  if (use_validation && selector.best_epoch > 0) {
    model.params = std::move(selector.best_params);
    model.selected_epoch = selector.best_epoch;
  } else {
    model.selected_epoch = config.epochs;
  }
  return model;
}

TrainedModel fit_bilstm(const BiLstmConfig& config, std::span<const SequenceFeature> train,
                        std::span<const int> train_labels, std::span<const SequenceFeature> validation,
                        std::span<const int> validation_labels) {
  config.validate();
  if (train.size() != train_labels.size() || validation.size() != validation_labels.size()) {
    throw ShapeError("fit_bilstm: sequences and labels differ in length");
  }
  if (validation.empty()) throw DomainError("fit_bilstm requires a non-empty validation set");

  TrainedModel model;
  model.kind = ModelKind::kBiLstm;
  model.bilstm = config;
  Rng init_rng(Rng::derive(config.seed, 0xA11CE));
  model.params = init_bilstm_params(config, init_rng);

  Optimizer optimizer(config.optimizer);
  Selector selector;
  std::vector<Matrix> grads;
  std::vector<SequenceFeature> batch;
  std::vector<int> batch_labels;
  const std::size_t n = train.size();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    const auto batches = epoch_batches(n, config.batch_size, config.seed, epoch);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& idx = batches[b];
      batch.clear();
      batch_labels.clear();
      for (auto i : idx) {
        batch.push_back(train[i]);
        batch_labels.push_back(train_labels[i]);
      }
      const std::uint64_t dropout_seed = Rng::derive(Rng::derive(config.seed, epoch), b + 0xD00D);
      const double loss = bilstm_loss(config, model.params, batch, batch_labels, true, dropout_seed, &grads);
      if (!std::isfinite(loss)) throw DivergenceError(epoch, b + 1);
      loss_sum += loss * static_cast<double>(idx.size());
      optimizer.step(model.params, grads);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = n ? loss_sum / static_cast<double>(n) : 0.0;
    const auto probs = bilstm_forward(config, model.params, validation, false, 0);
    rec.validation_f1 = f1_at_half(probs, validation_labels);
    selector.offer(epoch, *rec.validation_f1, model.params);
    model.history.push_back(rec);
  }
  if (selector.best_epoch > 0) {
    model.params = std::move(selector.best_params);
    model.selected_epoch = selector.best_epoch;
  }
  return model;
}

// ---------------------------------------------------------------------------
// Naive Bayes <-> TrainedModel

TrainedModel wrap_naive_bayes(const NaiveBayesModel& nb) {
  TrainedModel model;
  model.kind = ModelKind::kNaiveBayes;
  model.nb_alpha = nb.alpha;
  model.params.emplace_back(1, 2, std::vector<double>{nb.log_prior[0], nb.log_prior[1]});
  const std::size_t vocab = nb.log_likelihood[0].size();
  Matrix ll(2, vocab);
  for (int c = 0; c < 2; ++c) std::copy(nb.log_likelihood[c].begin(), nb.log_likelihood[c].end(), ll.row(c).begin());
  model.params.push_back(std::move(ll));
  return model;
}

NaiveBayesModel unwrap_naive_bayes(const TrainedModel& model) {
  if (model.kind != ModelKind::kNaiveBayes || model.params.size() != 2) {
    throw DomainError("model is not a Naive Bayes model");
  }
  NaiveBayesModel nb;
  nb.alpha = model.nb_alpha;
  nb.log_prior = {model.params[0](0, 0), model.params[0](0, 1)};
  for (int c = 0; c < 2; ++c) {
    auto row = model.params[1].row(c);
    nb.log_likelihood[c].assign(row.begin(), row.end());
  }
  return nb;
}

std::vector<double> predict_proba(const TrainedModel& model, const ModelInput& input) {
  switch (model.kind) {
    case ModelKind::kNaiveBayes: {
      const auto* counts = std::get_if<CsrMatrix>(&input);
      if (!counts) throw DomainError("Naive Bayes scores bag-of-words count rows");
      const auto nb = unwrap_naive_bayes(model);
      std::vector<double> out(counts->rows);
      for (std::size_t r = 0; r < counts->rows; ++r) {
        SparseVector row;
        row.dim = counts->cols;
        row.indices.assign(counts->indices.begin() + static_cast<std::ptrdiff_t>(counts->row_offsets[r]),
                           counts->indices.begin() + static_cast<std::ptrdiff_t>(counts->row_offsets[r + 1]));
        row.values.assign(counts->values.begin() + static_cast<std::ptrdiff_t>(counts->row_offsets[r]),
                          counts->values.begin() + static_cast<std::ptrdiff_t>(counts->row_offsets[r + 1]));
        out[r] = std::exp(predict_naive_bayes(nb, row).log_posterior[1]);
      }
      return out;
    }
    case ModelKind::kLogistic:
    case ModelKind::kMlp: {
      if (const auto* dense = std::get_if<Matrix>(&input)) {
        return gradient_model_proba(model.gradient, model.params, FeatureMatrix(*dense));
      }
      if (const auto* sparse = std::get_if<CsrMatrix>(&input)) {
        return gradient_model_proba(model.gradient, model.params, FeatureMatrix(*sparse));
      }
      throw DomainError(to_string(model.kind) + " models score feature matrices, not sequences");
    }
    case ModelKind::kBiLstm: {
      const auto* seqs = std::get_if<std::vector<SequenceFeature>>(&input);
      if (!seqs) throw DomainError("BiLSTM models score embedding sequences");
      std::vector<double> out;
      out.reserve(seqs->size());
      const std::size_t chunk = std::max<std::size_t>(1, model.bilstm.batch_size);
      for (std::size_t start = 0; start < seqs->size(); start += chunk) {
        const std::size_t len = std::min(chunk, seqs->size() - start);
        const auto part = bilstm_forward(model.bilstm, model.params,
                                         std::span<const SequenceFeature>(seqs->data() + start, len), false, 0);
        out.insert(out.end(), part.begin(), part.end());
      }
      return out;
    }
  }
  throw DomainError("unknown model kind");
}

std::vector<int> classify(std::span<const double> probabilities, double threshold) {
  std::vector<int> out(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) out[i] = probabilities[i] >= threshold ? 1 : 0;
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kModelMagic[4] = {'T', 'X', 'F', 'M'};
constexpr std::uint32_t kModelVersion = 1;

json optimizer_json(const OptimizerConfig& o) {
  return {{"kind", to_string(o.kind)},
          {"learning_rate", o.learning_rate},
          {"beta1", o.beta1},
          {"beta2", o.beta2},
          {"epsilon", o.epsilon}};
}

OptimizerConfig optimizer_from(const json& j) {
  OptimizerConfig o;
  o.kind = parse_optimizer_kind(j.at("kind").get<std::string>());
  o.learning_rate = j.at("learning_rate").get<double>();
  o.beta1 = j.at("beta1").get<double>();
  o.beta2 = j.at("beta2").get<double>();
  o.epsilon = j.at("epsilon").get<double>();
  return o;
}

json header_json(const TrainedModel& m) {
  json j;
  j["kind"] = to_string(m.kind);
  switch (m.kind) {
    case ModelKind::kNaiveBayes:
      j["config"] = {{"alpha", m.nb_alpha}};
      break;
    case ModelKind::kLogistic:
    case ModelKind::kMlp: {
      const auto& c = m.gradient;
      j["config"] = {{"hidden", c.hidden},         {"input_dim", c.input_dim}, {"optimizer", optimizer_json(c.optimizer)},
                     {"batch_size", c.batch_size}, {"epochs", c.epochs},       {"seed", c.seed}};
      break;
    }
    case ModelKind::kBiLstm: {
      const auto& c = m.bilstm;
      j["config"] = {{"embed_dim", c.embed_dim},
                     {"max_len", c.max_len},
                     {"hidden_units", c.hidden_units},
                     {"layers", c.layers},
                     {"spatial_dropout", c.spatial_dropout},
                     {"batch_size", c.batch_size},
                     {"optimizer", optimizer_json(c.optimizer)},
                     {"epochs", c.epochs},
                     {"head_hidden", c.head_hidden},
                     {"seed", c.seed}};
      break;
    }
  }
  json history = json::array();
  for (const auto& e : m.history) {
    json row = {{"epoch", e.epoch}, {"loss", e.loss}};
    row["validation_f1"] = e.validation_f1 ? json(*e.validation_f1) : json(nullptr);
    history.push_back(row);
  }
  j["history"] = history;
  j["selected_epoch"] = m.selected_epoch;
  return j;
}

}  // namespace

void TrainedModel::save(std::ostream& out) const {
  const std::string header = header_json(*this).dump();
  out.write(kModelMagic, 4);
  const std::uint32_t version = kModelVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  const std::uint64_t len = header.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  write_tensors(out, params);
}

TrainedModel TrainedModel::load(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kModelMagic, 4) != 0) throw DataError("not a model file (bad magic)");
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  if (!in.read(reinterpret_cast<char*>(&version), sizeof version) ||
      !in.read(reinterpret_cast<char*>(&len), sizeof len)) {
    throw DataError("truncated model header");
  }
  if (version != kModelVersion) throw DataError("unsupported model file version " + std::to_string(version));
  std::string header(len, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(len))) throw DataError("truncated model header");

  TrainedModel m;
  try {
    const json j = json::parse(header);
    m.kind = parse_model_kind(j.at("kind").get<std::string>());
    const json& c = j.at("config");
    switch (m.kind) {
      case ModelKind::kNaiveBayes:
        m.nb_alpha = c.at("alpha").get<double>();
        break;
      case ModelKind::kLogistic:
      case ModelKind::kMlp:
        m.gradient.hidden = c.at("hidden").get<std::vector<std::size_t>>();
        m.gradient.input_dim = c.at("input_dim").get<std::size_t>();
        m.gradient.optimizer = optimizer_from(c.at("optimizer"));
        m.gradient.batch_size = c.at("batch_size").get<std::size_t>();
        m.gradient.epochs = c.at("epochs").get<std::size_t>();
        m.gradient.seed = c.at("seed").get<std::uint64_t>();
        break;
      case ModelKind::kBiLstm:
        m.bilstm.embed_dim = c.at("embed_dim").get<std::size_t>();
        m.bilstm.max_len = c.at("max_len").get<std::size_t>();
        m.bilstm.hidden_units = c.at("hidden_units").get<std::size_t>();
        m.bilstm.layers = c.at("layers").get<std::size_t>();
        m.bilstm.spatial_dropout = c.at("spatial_dropout").get<double>();
        m.bilstm.batch_size = c.at("batch_size").get<std::size_t>();
        m.bilstm.optimizer = optimizer_from(c.at("optimizer"));
        m.bilstm.epochs = c.at("epochs").get<std::size_t>();
        m.bilstm.head_hidden = c.at("head_hidden").get<std::size_t>();
        m.bilstm.seed = c.at("seed").get<std::uint64_t>();
        break;
    }
    for (const auto& row : j.at("history")) {
      EpochRecord e;
      e.epoch = row.at("epoch").get<std::size_t>();
      e.loss = row.at("loss").get<double>();
      if (!row.at("validation_f1").is_null()) e.validation_f1 = row.at("validation_f1").get<double>();
      m.history.push_back(e);
    }
    m.selected_epoch = j.at("selected_epoch").get<std::size_t>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model header: ") + e.what());
  }
  m.params = read_tensors(in);
  return m;
}

}  // namespace toxfair
