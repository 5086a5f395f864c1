#include <benchmark/benchmark.h>

#include "toxfair/metrics.hpp"
#include "toxfair/numerics.hpp"
#include "toxfair/rng.hpp"

using namespace toxfair;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (auto& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

void BM_AffineDense(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Matrix x = random_matrix(n, 256, rng);
  const Matrix w = random_matrix(256, 100, rng);
  const std::vector<double> b(100, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(affine(x, w, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_AffineDense)->Arg(64)->Arg(512);

// TF-IDF shaped input: wide and about 1% dense.
void BM_AffineSparse(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t width = 20000;
  Rng rng(2);
  CsrMatrix x;
  x.cols = width;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;
    for (std::uint32_t c = 0; c < width; c += 1 + static_cast<std::uint32_t>(rng.below(200))) {
      cols.push_back(c);
      vals.push_back(rng.uniform());
    }
    x.append_row(cols, vals);
  }
  const Matrix w = random_matrix(width, 1, rng);
  const std::vector<double> b(1, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(affine(x, w, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_AffineSparse)->Arg(512)->Arg(4096);

void BM_RocAuc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  std::vector<double> s(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = static_cast<double>(rng.below(1000)) / 1000.0;
    y[i] = rng.bernoulli(0.1) ? 1 : 0;
  }
  y[0] = 1;
  y[1] = 0;
  for (auto _ : state) benchmark::DoNotOptimize(roc_auc(s, y));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_RocAuc)->Arg(1000)->Arg(100000);

}  // namespace
