#include <benchmark/benchmark.h>

#include "advaug/attack.hpp"
#include "advaug/training.hpp"

using namespace advaug;

namespace {

struct Fixture {
  ModelConfig config;
  DatasetSplit data;
  Model model;

  Fixture() : data(make_synthetic({.per_class = 50})) {
    Rng rng(1);
    model = Model{config, init_params(config, rng)};
  }
};

void BM_Fgsm(benchmark::State& state) {
  Fixture f;
  for (auto _ : state)
    benchmark::DoNotOptimize(fgsm(f.model, f.data.images, f.data.labels, {0.25, true}));
}
BENCHMARK(BM_Fgsm)->Unit(benchmark::kMillisecond);

// One full iteration on a batch of 100 for each mode.
void BM_TrainStep(benchmark::State& state) {
  Fixture f;
  TrainConfig cfg;
  cfg.mode = static_cast<TrainingMode>(state.range(0));
  OptimizerState opt = OptimizerState::for_params(f.model.params);
  Rng dropout(3);
  for (auto _ : state)
    benchmark::DoNotOptimize(train_step(f.model, opt, f.data.images, f.data.labels, cfg, dropout));
  state.SetLabel(std::string(mode_name(cfg.mode)));
}
BENCHMARK(BM_TrainStep)
    ->Arg(static_cast<int>(TrainingMode::Simple))
    ->Arg(static_cast<int>(TrainingMode::AT))
    ->Arg(static_cast<int>(TrainingMode::A2T))
    ->Arg(static_cast<int>(TrainingMode::A3T))
    ->Unit(benchmark::kMillisecond);

}  // namespace
