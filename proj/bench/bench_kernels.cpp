// Serial reference vs OpenMP kernel timings. Thread count follows
// OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <cmath>

#include "spanmetric/inference.hpp"
#include "spanmetric/kernels.hpp"
#include "spanmetric/rng.hpp"
#include "spanmetric/stats.hpp"
#include "spanmetric/synthetic.hpp"

using namespace spanmetric;

namespace {

std::vector<double> noisy(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = std::round(rng.normal() * 20.0);
  return v;
}

struct Corpus {
  net::Parameters params;
  std::vector<net::PreparedSegment> prepared;
  std::vector<net::TrainingExample> examples;
  std::vector<const net::TrainingExample*> batch;

  Corpus() : params(net::Parameters::initialize(net::EncoderConfig{}, 1)) {
    synthetic::Config sc;
    sc.segments = 1000;
    sc.detection_positives = 0;
    const auto c = synthetic::generate(sc);
    const net::Vocab vocab(params.config().bucket_count);
    for (std::size_t i = 0; i < 128; ++i) {
      prepared.push_back(net::prepare_segment(c.held_out[i], vocab, Mode::Unified, 256));
    }
    for (std::size_t i = 0; i < 64; ++i) examples.push_back(net::make_training_example(c.phase_two[i], vocab, 256));
    for (const auto& e : examples) batch.push_back(&e);
  }
};

const Corpus& corpus() {
  static const Corpus c;
  return c;
}

template <bool Parallel>
void PairCounts(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = noisy(n, 1), y = noisy(n, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? kernels::parallel::pair_counts(x, y) : kernels::serial::pair_counts(x, y));
  }
}

template <bool Parallel>
void PermutationNull(benchmark::State& state) {
  const auto h = noisy(2000, 3), a = noisy(2000, 4), b = noisy(2000, 5);
  const auto corr = stats::pearson_fn();
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? kernels::parallel::permutation_null(a, b, h, corr, 200, 1)
                                      : kernels::serial::permutation_null(a, b, h, corr, 200, 1));
  }
}

template <bool Parallel>
void ScoreBatch(benchmark::State& state) {
  const auto& c = corpus();
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? kernels::parallel::score_batch(c.params, c.prepared, Mode::Unified, {})
                                      : kernels::serial::score_batch(c.params, c.prepared, Mode::Unified, {}));
  }
}

template <bool Parallel>
void BatchGradient(benchmark::State& state) {
  const auto& c = corpus();
  const auto phase = net::PhaseSpec::phase_two();
  kernels::GradientScratch scratch;
  auto grads = c.params.zeros_like();
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? kernels::parallel::batch_gradient(c.params, c.batch, phase, scratch, grads)
                                      : kernels::serial::batch_gradient(c.params, c.batch, phase, scratch, grads));
  }
}

}  // namespace

BENCHMARK(PairCounts<false>)->Name("pair_counts/serial")->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(PairCounts<true>)->Name("pair_counts/parallel")->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(PermutationNull<false>)->Name("permutation_null/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(PermutationNull<true>)->Name("permutation_null/parallel")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(ScoreBatch<false>)->Name("score_batch/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(ScoreBatch<true>)->Name("score_batch/parallel")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BatchGradient<false>)->Name("batch_gradient/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BatchGradient<true>)->Name("batch_gradient/parallel")->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
