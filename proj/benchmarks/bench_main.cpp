#include <benchmark/benchmark.h>

#include <random>

#include "audiolm/analysis.hpp"
#include "audiolm/interleave.hpp"
#include "audiolm/scaling.hpp"
#include "audiolm/vocab.hpp"
#include "support.hpp"

namespace {

using namespace audiolm;

void BM_FlattenCodes(benchmark::State& state) {
  const VocabLayout layout;
  const auto frames = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::vector<std::uint32_t> data(frames * layout.num_codebooks());
  for (auto& c : data) c = rng() % layout.codebook_size();
  const CodeMatrix codes(frames, layout.num_codebooks(), data);
  std::vector<TokenId> out;
  for (auto _ : state) {
    out.clear();
    flatten_codes_into(codes, layout, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(frames * layout.num_codebooks()));
}
BENCHMARK(BM_FlattenCodes)->Arg(125)->Arg(12500);

void BM_RenderAndPack(benchmark::State& state) {
  const VocabLayout layout;
  std::mt19937_64 rng(2);
  std::vector<Document> docs;
  for (int i = 0; i < 1000; ++i) {
    docs.push_back(test::random_document(rng, layout, std::to_string(i), "speech", 8, 64, 250));
  }
  std::vector<RenderItem> items;
  for (const auto& d : docs) items.push_back({&d, RenderFormat::kAudioFirst});
  std::int64_t tokens = 0;
  for (auto _ : state) {
    const auto result = pack(items, 4096, layout);
    tokens += static_cast<std::int64_t>(result.sequences.size()) * 4096;
    benchmark::DoNotOptimize(result.sequences.data());
  }
  state.SetItemsProcessed(tokens);
}
BENCHMARK(BM_RenderAndPack)->Unit(benchmark::kMillisecond);

void BM_Spearman(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d;
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = d(rng);
    y[i] = x[i] + d(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(spearman(x, y));
}
BENCHMARK(BM_Spearman)->Arg(64)->Arg(100000);

void BM_FitParametric(benchmark::State& state) {
  const auto runs = test::synthetic_sweep();
  ParametricFitOptions options;
  options.threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_parametric(runs, options).E);
}
BENCHMARK(BM_FitParametric)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
