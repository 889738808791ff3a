#include <benchmark/benchmark.h>

#include "partforest/hog.hpp"
#include "partforest/rng.hpp"
#include "partforest/synth.hpp"

using namespace partforest;

static void HogCompute(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    Rng rng(1);
    ImageGrid img(side, side);
    for (double& v : img.data) v = rng.uniform(0.0, 255.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(compute_hog(img, 8, 9));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(HogCompute)->RangeMultiplier(2)->Range(64, 512)->Complexity();

static void SceneRender(benchmark::State& state) {
    const ActorStyle style = default_style();
    double phase = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            render_scene(Action::kWalk, style, phase, 160, 160, 7));
        phase += 0.01;
    }
}
BENCHMARK(SceneRender);
