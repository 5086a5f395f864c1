#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "grad_support.hpp"
#include "toxfair/error.hpp"
#include "toxfair/models.hpp"

using namespace toxfair;
using toxfair::testing::flatten;
using toxfair::testing::unflatten;

namespace {

Matrix random_features(std::size_t n, std::size_t d, Rng& rng) {
  Matrix x(n, d);
  for (auto& v : x.values()) v = rng.uniform(-1.0, 1.0);
  return x;
}

std::vector<int> random_labels(std::size_t n, Rng& rng) {
  std::vector<int> y(n);
  for (auto& v : y) v = rng.bernoulli(0.5) ? 1 : 0;
  return y;
}

double gradient_model_check(const GradientModelConfig& config, const FeatureMatrix& x, std::span<const int> y,
                            Rng& rng) {
  auto params = init_gradient_params(config, rng);
  testing::randomize_biases(params, rng);
  if (const auto* dense = std::get_if<Matrix>(&x)) {
    while (testing::relu_margin(config, params, *dense) < 1e-3) {
      params = init_gradient_params(config, rng);
      testing::randomize_biases(params, rng);
    }
  }
  const Objective f = [&](std::span<const double> theta, std::vector<double>* grad) {
    const auto p = unflatten(theta, params);
    std::vector<Matrix> g;
    const double loss = gradient_model_loss(config, p, x, y, grad ? &g : nullptr);
    if (grad) *grad = flatten(g);
    return loss;
  };
  return grad_check(f, flatten(params), 1e-5);
}

std::vector<SequenceFeature> random_sequences(std::size_t n, const BiLstmConfig& c, Rng& rng) {
  std::vector<SequenceFeature> out(n);
  for (auto& s : out) {
    s.true_length = 1 + rng.below(c.max_len);
    s.matrix = Matrix(c.max_len, c.embed_dim);
    for (std::size_t t = 0; t < s.true_length; ++t)
      for (std::size_t k = 0; k < c.embed_dim; ++k) s.matrix(t, k) = rng.uniform(-1.0, 1.0);
  }
  return out;
}

BiLstmConfig tiny_bilstm() {
  BiLstmConfig c;
  c.embed_dim = 3;
  c.max_len = 4;
  c.hidden_units = 2;
  c.layers = 2;
  c.head_hidden = 3;
  c.spatial_dropout = 0.3;
  c.batch_size = 4;
  c.optimizer = {OptimizerKind::kAdam, 0.01};
  c.epochs = 3;
  return c;
}

}  // namespace

TEST_CASE("Naive Bayes against a hand-computed posterior") {
  // Vocabulary {0: "good", 1: "bad"}; docs: [good good] -> 0, [bad] -> 1, [good bad bad] -> 1.
  CsrMatrix counts;
  counts.cols = 2;
  const std::uint32_t c0[] = {0}, c1[] = {1}, c2[] = {0, 1};
  const double v0[] = {2}, v1[] = {1}, v2[] = {1, 2};
  counts.append_row(c0, v0);
  counts.append_row(c1, v1);
  counts.append_row(c2, v2);
  const std::vector<int> y{0, 1, 1};
  const auto nb = fit_naive_bayes(counts, y, 1.0);

  // Class 0: good 2, bad 0, total 2 -> (3/4, 1/4). Class 1: good 1, bad 3, total 4 -> (2/6, 4/6).
  CHECK(nb.log_prior[0] == doctest::Approx(std::log(1.0 / 3.0)));
  CHECK(nb.log_likelihood[0][0] == doctest::Approx(std::log(0.75)));
  CHECK(nb.log_likelihood[1][1] == doctest::Approx(std::log(4.0 / 6.0)));

  SparseVector probe{2, {0, 1}, {1, 1}};
  const double s0 = std::log(1.0 / 3.0) + std::log(0.75) + std::log(0.25);
  const double s1 = std::log(2.0 / 3.0) + std::log(2.0 / 6.0) + std::log(4.0 / 6.0);
  const auto pred = predict_naive_bayes(nb, probe);
  CHECK(pred.label == (s1 > s0 ? 1 : 0));
  CHECK(std::exp(pred.log_posterior[1]) == doctest::Approx(std::exp(s1) / (std::exp(s0) + std::exp(s1))));

  CHECK_THROWS_AS(fit_naive_bayes(counts, std::vector<int>{1, 1, 1}, 1.0), DomainError);
  CHECK_THROWS_AS(fit_naive_bayes(counts, y, 0.0), ConfigError);
}

TEST_CASE("Naive Bayes ties go to class 0") {
  NaiveBayesModel nb;
  nb.log_prior = {std::log(0.5), std::log(0.5)};
  nb.log_likelihood = {std::vector<double>{std::log(0.5), std::log(0.5)},
                       std::vector<double>{std::log(0.5), std::log(0.5)}};
  CHECK(predict_naive_bayes(nb, SparseVector{2, {0}, {1}}).label == 0);
}

TEST_CASE("analytic gradients of logistic and MLP models match finite differences") {
  Rng rng(101);
  for (const auto& hidden : std::vector<std::vector<std::size_t>>{{}, {6}, {5, 4}}) {
    for (int trial = 0; trial < 3; ++trial) {
      GradientModelConfig config;
      config.hidden = hidden;
      config.input_dim = 4;
      const Matrix x = random_features(6, 4, rng);
      const auto y = random_labels(6, rng);
      CHECK(gradient_model_check(config, x, y, rng) < 1e-6);
    }
  }
}

TEST_CASE("gradients on sparse input equal the dense ones") {
  Rng rng(7);
  GradientModelConfig config;
  config.hidden = {3};
  config.input_dim = 3;
  const Matrix dense{{0.0, 1.0, 0.0}, {0.5, 0.0, -2.0}};
  CsrMatrix sparse;
  sparse.cols = 3;
  const std::uint32_t i0[] = {1}, i1[] = {0, 2};
  const double v0[] = {1.0}, v1[] = {0.5, -2.0};
  sparse.append_row(i0, v0);
  sparse.append_row(i1, v1);
  const std::vector<int> y{1, 0};
  const auto params = init_gradient_params(config, rng);
  std::vector<Matrix> gd, gs;
  const double ld = gradient_model_loss(config, params, dense, y, &gd);
  const double ls = gradient_model_loss(config, params, sparse, y, &gs);
  CHECK(ld == doctest::Approx(ls).epsilon(1e-14));
  for (std::size_t i = 0; i < gd.size(); ++i) {
    for (std::size_t k = 0; k < gd[i].size(); ++k) {
      CHECK(gd[i].values()[k] == doctest::Approx(gs[i].values()[k]).epsilon(1e-14));
    }
  }
}

TEST_CASE("BiLSTM gradients match finite differences, with and without dropout") {
  Rng rng(55);
  const BiLstmConfig config = tiny_bilstm();
  auto params = init_bilstm_params(config, rng);
  CHECK(params.size() == bilstm_param_count(config));
  testing::randomize_biases(params, rng);
  const auto batch = random_sequences(3, config, rng);
  const std::vector<int> y{1, 0, 1};
  for (const bool train_mode : {false, true}) {
    const Objective f = [&](std::span<const double> theta, std::vector<double>* grad) {
      const auto p = unflatten(theta, params);
      std::vector<Matrix> g;
      const double loss = bilstm_loss(config, p, batch, y, train_mode, 99, grad ? &g : nullptr);
      if (grad) *grad = flatten(g);
      return loss;
    };
    CHECK(grad_check(f, flatten(params), 1e-5) < 1e-4);
    const auto split = testing::split_grad_check(f, flatten(params), 1e-5);
    CHECK(split.relative < 1e-6);
    CHECK(split.absolute < 1e-9);
  }
}

TEST_CASE("reverse LSTM direction runs back to front") {
  Rng rng(2);
  Matrix w(2, 4), u(1, 4), b(1, 4);
  for (auto* m : {&w, &u, &b})
    for (auto& v : m->values()) v = rng.uniform(-1, 1);
  const Matrix x{{1.0, 0.0}, {0.0, 1.0}, {0.5, 0.5}};
  const Matrix flipped{{0.5, 0.5}, {0.0, 1.0}, {1.0, 0.0}};
  const Matrix fwd = lstm_direction(w, u, b, flipped, 3, false);
  const Matrix rev = lstm_direction(w, u, b, x, 3, true);
  for (std::size_t t = 0; t < 3; ++t) CHECK(rev(t, 0) == doctest::Approx(fwd(2 - t, 0)).epsilon(1e-15));
}

TEST_CASE("padding beyond the true length does not change the output") {
  Rng rng(4);
  BiLstmConfig config = tiny_bilstm();
  const auto params = init_bilstm_params(config, rng);
  auto seqs = random_sequences(2, config, rng);
  seqs[0].true_length = 2;
  auto noisy = seqs;
  for (std::size_t t = 2; t < config.max_len; ++t) noisy[0].matrix(t, 0) = 0.0;
  CHECK(bilstm_forward(config, params, seqs, false, 0) == bilstm_forward(config, params, noisy, false, 0));
}

TEST_CASE("training reduces the loss and keeps the best validation epoch") {
  Rng rng(8);
  const std::size_t n = 200;
  Matrix x(n, 2);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform(-1, 1);
    x(i, 1) = rng.uniform(-1, 1);
    y[i] = x(i, 0) + 0.5 * x(i, 1) > 0 ? 1 : 0;
  }
  GradientModelConfig config;
  config.input_dim = 2;
  config.optimizer = {OptimizerKind::kAdam, 0.05};
  config.batch_size = 32;
  config.epochs = 15;
  config.seed = 3;
  const FeatureMatrix fx = x;
  const auto model = fit_gradient_model(config, fx, y, ValidationSet{&fx, y});
  REQUIRE(model.history.size() == 15);
  CHECK(model.history.back().loss < model.history.front().loss);
  double best = -1;
  std::size_t best_epoch = 0;
  for (const auto& h : model.history) {
    if (*h.validation_f1 > best) {
      best = *h.validation_f1;
      best_epoch = h.epoch;
    }
  }
  CHECK(model.selected_epoch == best_epoch);
  const auto probs = predict_proba(model, x);
  const auto labels = classify(probs, 0.5);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) correct += labels[i] == y[i];
  CHECK(correct > 180);

  // Same seed, same model.
  const auto again = fit_gradient_model(config, fx, y, ValidationSet{&fx, y});
  CHECK(again.params == model.params);
}

TEST_CASE("a non-finite loss raises DivergenceError with its position") {
  Matrix x{{1.0}, {std::numeric_limits<double>::quiet_NaN()}};
  const std::vector<int> y{1, 0};
  GradientModelConfig config;
  config.input_dim = 1;
  config.batch_size = 2;
  config.epochs = 1;
  try {
    fit_gradient_model(config, x, y);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch() == 1);
    CHECK(e.batch() == 1);
  }
}

TEST_CASE("model files round-trip and reject garbage") {
  Rng rng(12);
  GradientModelConfig config;
  config.hidden = {3};
  config.input_dim = 2;
  config.epochs = 2;
  const Matrix x = random_features(10, 2, rng);
  const auto y = random_labels(10, rng);
  const auto model = fit_gradient_model(config, x, y);
  std::stringstream s;
  model.save(s);
  const auto back = TrainedModel::load(s);
  CHECK(back.kind == ModelKind::kMlp);
  CHECK(back.params == model.params);
  CHECK(back.history.size() == 2);
  CHECK(back.gradient.hidden == std::vector<std::size_t>{3});
  CHECK(predict_proba(back, x) == predict_proba(model, x));

  std::stringstream junk("TXFQ....");
  CHECK_THROWS_AS(TrainedModel::load(junk), DataError);
  std::stringstream cut(s.str().substr(0, 12));
  CHECK_THROWS_AS(TrainedModel::load(cut), DataError);
}

TEST_CASE("BiLSTM training is deterministic and round-trips") {
  Rng rng(13);
  BiLstmConfig config = tiny_bilstm();
  config.seed = 5;
  const auto train = random_sequences(12, config, rng);
  const auto val = random_sequences(4, config, rng);
  const auto yt = random_labels(12, rng);
  const std::vector<int> yv{0, 1, 0, 1};
  const auto a = fit_bilstm(config, train, yt, val, yv);
  const auto b = fit_bilstm(config, train, yt, val, yv);
  CHECK(a.params == b.params);
  CHECK(a.history.size() == 3);
  std::stringstream s;
  a.save(s);
  const auto back = TrainedModel::load(s);
  CHECK(predict_proba(back, val) == predict_proba(a, val));
  CHECK_THROWS_AS(fit_bilstm(config, train, yt, {}, {}), DomainError);
}

TEST_CASE("predict_proba rejects inputs of the wrong kind") {
  Rng rng(1);
  GradientModelConfig config;
  config.input_dim = 2;
  config.epochs = 1;
  const Matrix x = random_features(4, 2, rng);
  const auto model = fit_gradient_model(config, x, std::vector<int>{0, 1, 0, 1});
  CHECK_THROWS_AS(predict_proba(model, std::vector<SequenceFeature>{}), DomainError);
  CHECK_THROWS_AS(predict_proba(model, Matrix(2, 3)), ShapeError);
  CHECK(classify(std::vector<double>{0.5, 0.49}, 0.5) == std::vector<int>{1, 0});
}

TEST_CASE("configuration validation") {
  GradientModelConfig g;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g.input_dim = 3;
  g.hidden = {0};
  CHECK_THROWS_AS(g.validate(), ConfigError);
  BiLstmConfig b = tiny_bilstm();
  b.spatial_dropout = 1.0;
  CHECK_THROWS_AS(b.validate(), ConfigError);
  CHECK(parse_model_kind("bilstm") == ModelKind::kBiLstm);
  CHECK_THROWS_AS(parse_model_kind("svm"), ConfigError);
}
