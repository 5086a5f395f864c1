#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "toxfair/features.hpp"
#include "toxfair/rng.hpp"

using namespace toxfair;

namespace {

std::vector<std::vector<std::string>> random_documents(std::size_t n, std::size_t vocab, Rng& rng) {
  std::vector<std::vector<std::string>> docs(n);
  for (auto& d : docs) {
    const std::size_t len = 10 + rng.below(40);
    for (std::size_t i = 0; i < len; ++i) d.push_back("w" + std::to_string(rng.below(vocab)));
  }
  return docs;
}

void BM_TfIdfFit(benchmark::State& state) {
  Rng rng(1);
  const auto docs = random_documents(static_cast<std::size_t>(state.range(0)), 5000, rng);
  for (auto _ : state) benchmark::DoNotOptimize(TfIdfModel::fit(docs));
}
BENCHMARK(BM_TfIdfFit)->Arg(2000);

void BM_TfIdfTransform(benchmark::State& state) {
  Rng rng(2);
  const auto docs = random_documents(static_cast<std::size_t>(state.range(0)), 5000, rng);
  const auto model = TfIdfModel::fit(docs);
  for (auto _ : state) benchmark::DoNotOptimize(model.transform_all(docs));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_TfIdfTransform)->Arg(2000);

}  // namespace
