#include <benchmark/benchmark.h>

#include "pathosr/dataset.hpp"
#include "pathosr/generator.hpp"
#include "pathosr/imaging.hpp"
#include "pathosr/inference.hpp"
#include "pathosr/synthetic.hpp"
#include "pathosr/tensor_bridge.hpp"

using namespace pathosr;

namespace {

const Image& tissue() {
  static const Image img = synthetic_tissue(1024, 1024, 1);
  return img;
}

void BM_BicubicHalving(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const auto src = bicubic_resize(tissue(), n, n);
  for (auto _ : state) benchmark::DoNotOptimize(bicubic_resize(src, n / 2, n / 2));
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_BicubicHalving)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_BuildPyramid(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(build_pyramid(tissue()));
}
BENCHMARK(BM_BuildPyramid)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const auto a = bicubic_resize(tissue(), n, n);
  const auto b = bicubic_resize(bicubic_resize(a, n / 2, n / 2), n, n);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Psnr(benchmark::State& state) {
  const auto a = bicubic_resize(tissue(), 256, 256);
  const auto b = bicubic_resize(bicubic_resize(a, 128, 128), 256, 256);
  for (auto _ : state) benchmark::DoNotOptimize(psnr(a, b));
}
BENCHMARK(BM_Psnr)->Unit(benchmark::kMicrosecond);

void BM_PixelShuffle(benchmark::State& state) {
  auto x = torch::rand({2, 12, state.range(0), state.range(0)});
  for (auto _ : state) {
    auto y = pathosr::pixel_shuffle(x, 2).contiguous();
    benchmark::DoNotOptimize(y.data_ptr());
  }
}
BENCHMARK(BM_PixelShuffle)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_TinyGeneratorForward(benchmark::State& state) {
  torch::manual_seed(0);
  Generator g(GeneratorConfig::tiny());
  g->eval();
  torch::NoGradGuard no_grad;
  auto x = torch::rand({1, 3, state.range(0), state.range(0)});
  for (auto _ : state) benchmark::DoNotOptimize(g->forward(x));
}
BENCHMARK(BM_TinyGeneratorForward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_StitchBicubic(benchmark::State& state) {
  const auto img = bicubic_resize(tissue(), 300, 300);
  const TileResolver resolve = [](const Image& t) {
    return bicubic_resize(t, t.height() * 2, t.width() * 2);
  };
  for (auto _ : state) benchmark::DoNotOptimize(stitch(img, 2, StitchPlan{}, resolve));
}
BENCHMARK(BM_StitchBicubic)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
