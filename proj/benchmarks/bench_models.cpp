#include <benchmark/benchmark.h>

#include "toxfair/models.hpp"
#include "toxfair/rng.hpp"

using namespace toxfair;

namespace {

// Sizes of the shipped BiLSTM demo config.
BiLstmConfig demo_config() {
  BiLstmConfig c;
  c.embed_dim = 25;
  c.max_len = 50;
  c.hidden_units = 16;
  c.layers = 2;
  c.head_hidden = 16;
  c.spatial_dropout = 0.2;
  return c;
}

std::vector<SequenceFeature> random_batch(const BiLstmConfig& c, std::size_t n, Rng& rng) {
  std::vector<SequenceFeature> batch(n);
  for (auto& s : batch) {
    s.true_length = 5 + rng.below(c.max_len - 5);
    s.matrix = Matrix(c.max_len, c.embed_dim);
    for (std::size_t t = 0; t < s.true_length; ++t)
      for (std::size_t k = 0; k < c.embed_dim; ++k) s.matrix(t, k) = rng.uniform(-0.5, 0.5);
  }
  return batch;
}

void BM_BiLstmForward(benchmark::State& state) {
  const auto c = demo_config();
  Rng rng(1);
  const auto params = init_bilstm_params(c, rng);
  const auto batch = random_batch(c, 32, rng);
  for (auto _ : state) benchmark::DoNotOptimize(bilstm_forward(c, params, batch, false, 0));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch.size()));
}
BENCHMARK(BM_BiLstmForward);

void BM_BiLstmLossAndGradient(benchmark::State& state) {
  const auto c = demo_config();
  Rng rng(2);
  const auto params = init_bilstm_params(c, rng);
  const auto batch = random_batch(c, 32, rng);
  std::vector<int> labels(batch.size());
  for (auto& y : labels) y = rng.bernoulli(0.3) ? 1 : 0;
  std::vector<Matrix> grads;
  for (auto _ : state) benchmark::DoNotOptimize(bilstm_loss(c, params, batch, labels, true, 7, &grads));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch.size()));
}
BENCHMARK(BM_BiLstmLossAndGradient);

void BM_LogisticLoss(benchmark::State& state) {
  GradientModelConfig c;
  c.input_dim = 5000;
  Rng rng(3);
  const auto params = init_gradient_params(c, rng);
  CsrMatrix x;
  x.cols = c.input_dim;
  for (int i = 0; i < 512; ++i) {
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;
    for (std::uint32_t k = 0; k < c.input_dim; k += 1 + static_cast<std::uint32_t>(rng.below(300))) {
      cols.push_back(k);
      vals.push_back(rng.uniform());
    }
    x.append_row(cols, vals);
  }
  std::vector<int> labels(512);
  for (auto& y : labels) y = rng.bernoulli(0.3) ? 1 : 0;
  const FeatureMatrix fx = x;
  std::vector<Matrix> grads;
  for (auto _ : state) benchmark::DoNotOptimize(gradient_model_loss(c, params, fx, labels, &grads));
}
BENCHMARK(BM_LogisticLoss);

}  // namespace
