#include <benchmark/benchmark.h>

#include "drivesig/baselines.hpp"
#include "drivesig/corruption.hpp"
#include "drivesig/lstm.hpp"
#include "drivesig/numerics.hpp"
#include "drivesig/synth.hpp"

using namespace drivesig;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, SeededRng& rng) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  SeededRng rng(1);
  const Matrix a = random_matrix(n, n, rng), b = random_matrix(n, 64, rng);
  Matrix out(n, 64);
  for (auto _ : state) {
    gemm(a, false, b, false, out);
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(2 * n * n * 64));
}
BENCHMARK(BM_Gemm)->Arg(64)->Arg(200)->Arg(400);

struct LstmFixture {
  LstmModel model;
  std::vector<Matrix> windows;
  std::vector<const Matrix*> ptrs;
  std::vector<std::size_t> labels;

  explicit LstmFixture(std::size_t batch) {
    SeededRng rng(2);
    ModelConfig cfg;
    cfg.num_classes = 5;
    model = LstmModel::initialize(cfg, 8, rng);
    for (std::size_t i = 0; i < batch; ++i) {
      windows.push_back(random_matrix(cfg.window_length, 8, rng));
      labels.push_back(i % 5);
    }
    for (const auto& w : windows) ptrs.push_back(&w);
  }
};

void BM_LstmForward(benchmark::State& state) {
  LstmFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(forward_batch(f.model, f.ptrs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LstmForward)->Arg(1)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_LstmForwardBackward(benchmark::State& state) {
  LstmFixture f(static_cast<std::size_t>(state.range(0)));
  std::vector<Matrix> grads;
  for (auto _ : state)
    benchmark::DoNotOptimize(loss_and_gradients(f.model, f.ptrs, f.labels, &grads));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LstmForwardBackward)->Arg(64)->Unit(benchmark::kMillisecond);

RowDataset synth_rows(std::size_t rows_per_trip) {
  SynthOptions o;
  o.rows_per_trip = rows_per_trip;
  o.seed = 3;
  const FrameTable t = generate(default_profiles(), o);
  return rows_from_table(t, t.driver_ids());
}

void BM_TreeTrain(benchmark::State& state) {
  const RowDataset rows = synth_rows(static_cast<std::size_t>(state.range(0)));
  SeededRng rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(train_tree(rows, {}, rng));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(rows.size()));
}
BENCHMARK(BM_TreeTrain)->Arg(400)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_ForestTrain(benchmark::State& state) {
  const RowDataset rows = synth_rows(400);
  ForestConfig cfg;
  cfg.n_trees = 20;
  for (auto _ : state) benchmark::DoNotOptimize(train_forest(rows, cfg, 5));
}
BENCHMARK(BM_ForestTrain)->Unit(benchmark::kMillisecond);

void BM_InjectNoise(benchmark::State& state) {
  SynthOptions o;
  o.seed = 6;
  const FrameTable t = generate(default_profiles(), o);
  const std::vector<double> sd(t.feature_count(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(inject_noise(t, {0.5, 1.0, 7}, sd));
  state.SetItemsProcessed(state.iterations() *
                          static_cast<long>(t.row_count() * t.feature_count()));
}
BENCHMARK(BM_InjectNoise)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
