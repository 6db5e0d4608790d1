#include <benchmark/benchmark.h>

#include <random>

#include "spcl/config.hpp"
#include "spcl/data.hpp"
#include "spcl/net.hpp"
#include "spcl/ops.hpp"
#include "spcl/trainer.hpp"

using namespace spcl;
using tensor::Tape;
using tensor::Tensor;

namespace {

Tensor random_tensor(tensor::Shape shape, std::uint64_t seed, bool grad = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::size_t size = 1;
  for (auto d : shape) size *= d;
  std::vector<double> v(size);
  for (auto& x : v) x = n(rng);
  return Tensor(std::move(shape), std::move(v), grad);
}

void BM_Conv3x3Forward(benchmark::State& state) {
  const auto ch = static_cast<std::size_t>(state.range(0));
  const auto input = random_tensor({ch, 64, 64}, 1);
  const auto weight = random_tensor({ch, ch, 3, 3}, 2);
  const auto bias = random_tensor({ch}, 3);
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(tensor::conv2d(tape, input, weight, bias, {1, 1}));
  }
}
BENCHMARK(BM_Conv3x3Forward)->Arg(8)->Arg(16)->Arg(32);

void BM_Conv3x3ForwardBackward(benchmark::State& state) {
  const auto ch = static_cast<std::size_t>(state.range(0));
  const auto input = random_tensor({ch, 64, 64}, 1, true);
  const auto weight = random_tensor({ch, ch, 3, 3}, 2, true);
  const auto bias = random_tensor({ch}, 3, true);
  for (auto _ : state) {
    Tape tape;
    tape.backward(tensor::sum(tape, tensor::conv2d(tape, input, weight, bias, {1, 1})));
  }
}
BENCHMARK(BM_Conv3x3ForwardBackward)->Arg(8)->Arg(16)->Arg(32);

void BM_NetworkForward(benchmark::State& state) {
  const net::NetConfig cfg;
  const auto params = net::init_params(cfg, 0);
  const auto image = random_tensor({1, 64, 64}, 4);
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(net::forward(tape, params, image));
  }
}
BENCHMARK(BM_NetworkForward);

// Whole training steps (forward, losses, backward, update) at the default
// configuration; reported time is per step.
void BM_TrainStep(benchmark::State& state) {
  TrainConfig cfg;
  cfg.steps = 10;
  cfg.eval_every = cfg.steps;
  cfg.use_unsup = state.range(0) > 0;
  cfg.use_icl = cfg.use_bcl = state.range(0) > 1;
  const auto ds = data::generate(cfg.split_spec(), cfg.generator_options());
  for (auto _ : state) benchmark::DoNotOptimize(trainer::train(cfg, ds));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * cfg.steps));
}
BENCHMARK(BM_TrainStep)->ArgName("variant")->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
