#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "bridgeplan/bridge.hpp"
#include "bridgeplan/embedder.hpp"
#include "bridgeplan/encoder.hpp"
#include "bridgeplan/planner.hpp"

namespace {

using namespace bridgeplan;

const std::string kText =
    "the movie star recommended a film about space travel and old friends "
    "sure , tell me more about that director";

void BM_Featurize(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(featurize(kText, m));
}
BENCHMARK(BM_Featurize)->Arg(256)->Arg(1024);

void BM_SampleTrajectory(benchmark::State& state) {
  BridgeConfig cfg;
  const LatentVec z0(cfg.d, 0.5), zT(cfg.d, -1.0), zu(cfg.d, 0.1);
  Rng rng(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_trajectory(z0, zT, zu, 0.3, static_cast<int>(state.range(0)), cfg, rng));
  }
}
BENCHMARK(BM_SampleTrajectory)->Arg(4)->Arg(8);

std::vector<TupleSample> bench_tuples(std::size_t n) {
  std::vector<TupleSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    TupleSample s;
    s.dialogue_id = "d" + std::to_string(i);
    s.u_text = "sure , tell me more about topic" + std::to_string(i % 7);
    s.s0_text = kText + " topic" + std::to_string(i);
    s.st_text = "chat topic" + std::to_string(i + 1);
    s.sT_text = "recommend topic" + std::to_string(i + 2);
    s.t = 1 + static_cast<int>(i % 3);
    s.T = 4;
    out.push_back(s);
  }
  return out;
}

void BM_LossGradients(benchmark::State& state) {
  const auto batch_size = static_cast<std::size_t>(state.range(0));
  const auto tuples = bench_tuples(batch_size);
  std::vector<std::size_t> idx(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) idx[i] = i;
  const Batch batch = make_batch(tuples, idx);
  const Featurizer f(1024);
  const EncoderParams p = EncoderParams::init(1024, 16, 1);
  for (auto _ : state) benchmark::DoNotOptimize(loss_gradients(batch, p, BridgeConfig{}, f));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch_size));
}
BENCHMARK(BM_LossGradients)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Plan(benchmark::State& state) {
  const Featurizer f(1024);
  const EncoderParams enc = EncoderParams::init(1024, 16, 1);
  PlannerParams planner = PlannerParams::init(1024, 8, 2);
  for (double& w : planner.horizon.params()) w = 0.0;
  planner.horizon.params()[planner.horizon.layers().back().bias_offset + 5] = 1.0;
  PlanInput in;
  in.context_text = kText;
  in.knowledge_text = "movie directed_by someone";
  in.target = {std::string("recommend"), "space film"};
  for (int i = 0; i < 20; ++i) in.candidates.push_back({std::string("chat"), "topic" + std::to_string(i)});
  in.candidates.push_back(in.target);
  Rng rng(3);
  const PlanOptions opts{static_cast<int>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(plan(in, enc, planner, BridgeConfig{}, f, rng, opts));
}
BENCHMARK(BM_Plan)->Arg(1)->Arg(5)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
