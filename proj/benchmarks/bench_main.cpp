#include <benchmark/benchmark.h>

#include <vector>

#include "ares/config.hpp"
#include "ares/escape.hpp"
#include "ares/evaluation.hpp"
#include "ares/synthesis.hpp"
#include "ares/training.hpp"

using namespace ares;

namespace {

std::vector<Vector> normal_points(std::size_t n, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vector> pts(n, Vector(p));
  for (auto& v : pts)
    for (auto& x : v) x = rng.normal();
  return pts;
}

const DataBundle& desk_bundle() {
  static const DataBundle b = make_bundle(DataConfig{});
  return b;
}

}  // namespace

static void BM_FitGaussian(benchmark::State& state) {
  const auto pts = normal_points(static_cast<std::size_t>(state.range(0)), 16, 1);
  for (auto _ : state) benchmark::DoNotOptimize(fit_gaussian(pts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitGaussian)->Arg(128)->Arg(1200)->Arg(10000);

static void BM_PoolLoglik(benchmark::State& state) {
  const ExpandedSet xs = identity_expansion(normal_points(10000, 16, 2));
  const GaussianModel m = estimate_outlier_region(xs);
  for (auto _ : state) benchmark::DoNotOptimize(pool_loglik(xs, m));
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_PoolLoglik);

static void BM_SelectEpsilon(benchmark::State& state) {
  const ExpandedSet xs = identity_expansion(normal_points(20000, 16, 3));
  const std::vector<double> ll = pool_loglik(xs, estimate_outlier_region(xs));
  Rng rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(select_epsilon(ll, 10000, 128, rng));
}
BENCHMARK(BM_SelectEpsilon);

static void BM_ExpandFeatures(benchmark::State& state) {
  const auto feats = normal_points(1200, 16, 5);
  Rng rng(6);
  for (auto _ : state) benchmark::DoNotOptimize(expand_features(feats, 2.0, 1200, rng));
}
BENCHMARK(BM_ExpandFeatures);

static void BM_EscapeDataset(benchmark::State& state) {
  const DataBundle& b = desk_bundle();
  Rng rng(7);
  for (auto _ : state) benchmark::DoNotOptimize(escape_dataset(b.id_train, b.aux, EscapeConfig{}, rng));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(b.id_train.size()));
}
BENCHMARK(BM_EscapeDataset);

static void BM_StepObjective(benchmark::State& state) {
  const DataBundle& b = desk_bundle();
  const TrainConfig cfg = desk_preset().train;
  const MlpNetwork net = initial_network(cfg, 2, 3);
  const std::vector<LabeledVector> batch(b.id_train.begin(), b.id_train.begin() + 128);
  VirtualOutliers virt;
  virt.features = normal_points(128, cfg.feature_dim, 8);
  ObjectiveOptions opt;
  GradientTape tape(net);
  for (auto _ : state) {
    tape.zero();
    benchmark::DoNotOptimize(step_objective(net, batch, state.range(0) ? &virt : nullptr, opt, &tape));
  }
}
BENCHMARK(BM_StepObjective)->Arg(0)->Arg(1);

static void BM_Auroc(benchmark::State& state) {
  Rng rng(9);
  std::vector<double> a(10000), b(10000);
  for (auto& x : a) x = rng.normal() + 0.5;
  for (auto& x : b) x = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(auroc(a, b));
    benchmark::DoNotOptimize(fpr95(a, b));
  }
}
BENCHMARK(BM_Auroc);

static void BM_JointEpoch(benchmark::State& state) {
  const DataBundle& b = desk_bundle();
  TrainConfig cfg = desk_preset().train;
  cfg.total_epochs = 2;
  cfg.pretrain_epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(cfg, b));
}
BENCHMARK(BM_JointEpoch)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
