#include <benchmark/benchmark.h>

#include <random>

#include "sciembed/eval_retrieval.hpp"
#include "sciembed/geometry.hpp"
#include "sciembed/half.hpp"
#include "sciembed/pooling.hpp"
#include "sciembed/text_prep.hpp"

using namespace sciembed;

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = g(rng);
  return m;
}

void BM_Knn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = gaussian(n, 100, 1);
  std::size_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(knn(q, m, 500));
    q = (q + 1) % n;
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Knn)->Arg(2000)->Arg(20000);

void BM_RunBenchmark(benchmark::State& state) {
  auto m = gaussian(4000, 100, 2);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < m.rows(); ++i) labels.push_back(i % 2 ? "A" : "B");
  const LabeledPool pool(std::move(m), std::move(labels));
  BenchmarkOptions opt;
  opt.n_queries = 200;
  opt.threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_benchmark(pool, opt));
}
BENCHMARK(BM_RunBenchmark)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

ActivationMatrix document(std::size_t tokens, std::size_t width) {
  ActivationMatrix a;
  a.pmid = 1;
  a.rows = gaussian(tokens, width, 3);
  for (std::size_t i = 0; i < tokens; ++i) {
    const bool special = i == 0 || i + 1 == tokens;
    a.tokens.push_back(special ? (i == 0 ? "[CLS]" : "[SEP]") : (i % 3 == 0 ? "##ing" : "cortex"));
    a.special_mask.push_back(special);
  }
  return a;
}

void BM_Pool(benchmark::State& state) {
  const auto doc = document(512, 768);
  const auto strategy = static_cast<PoolingStrategy>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(pool(doc, strategy));
  state.SetLabel(std::string(to_string(strategy)));
}
BENCHMARK(BM_Pool)->DenseRange(0, 4);

void BM_HalfRoundTrip(benchmark::State& state) {
  const auto m = gaussian(1, 1 << 16, 4);
  std::vector<std::uint16_t> bits(m.data().size());
  for (auto _ : state) {
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = float_to_half(m.data()[i]);
    float acc = 0.0f;
    for (auto b : bits) acc += half_to_float(b);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(bits.size()));
}
BENCHMARK(BM_HalfRoundTrip);

void BM_Normalize(benchmark::State& state) {
  const std::string title = "Cortical Thickness Predicts Working Memory in 120 Adults";
  std::string abstract;
  for (int i = 0; i < 20; ++i) abstract += "We scanned 1,024 subjects (p<0.05) at 3T over 12.5 minutes. ";
  for (auto _ : state) benchmark::DoNotOptimize(normalize(title, abstract));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(title.size() + abstract.size()));
}
BENCHMARK(BM_Normalize);

void BM_FitSpace(benchmark::State& state) {
  const auto m = gaussian(10000, 768, 5);
  for (auto _ : state) benchmark::DoNotOptimize(fit_space(m, 100));
}
BENCHMARK(BM_FitSpace)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace
BENCHMARK_MAIN();
