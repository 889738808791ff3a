#include <benchmark/benchmark.h>

#include "partforest/infer.hpp"
#include "partforest/rng.hpp"

using namespace partforest;

namespace {

ImageGrid random_scores(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    ImageGrid g(w, h);
    for (double& v : g.data) v = rng.uniform(-2.0, 2.0);
    return g;
}

// A 13-part mixture model with random scores, enough to time the sweep.
struct BenchWorld {
    PartTreeModel m;
    ResponseStack rs;
    BlobMask mask;
};

BenchWorld make_world(int cells) {
    BenchWorld w;
    w.m = make_default_skeleton(FeatureConfig{8, 9}, 4);
    w.m.types.resize(w.m.part_count());
    w.m.pairwise.resize(w.m.part_count());
    Rng rng(3);
    for (int p = 0; p < w.m.part_count(); ++p) {
        w.m.types[p].resize(w.m.parts[p].n_types);
        for (PartType& t : w.m.types[p]) {
            t.filter.assign(w.m.feature_len(p), 0.0);
            t.anchor_dx = rng.uniform(-2, 2);
            t.anchor_dy = rng.uniform(-2, 2);
        }
        if (w.m.parts[p].parent >= 0) {
            const int tp = w.m.parts[w.m.parts[p].parent].n_types;
            w.m.pairwise[p].co_occurrence.assign(w.m.parts[p].n_types,
                                                 std::vector<double>(tp, 0.0));
            w.m.pairwise[p].deform.assign(
                w.m.parts[p].n_types,
                std::vector<DeformWeights>(tp, DeformWeights{0.0, -0.5, 0.0, -0.5}));
        }
    }
    w.rs.cells_x = cells;
    w.rs.cells_y = cells;
    w.rs.cell_size = 8;
    w.rs.maps.resize(w.m.part_count());
    for (int p = 0; p < w.m.part_count(); ++p)
        for (int t = 0; t < w.m.parts[p].n_types; ++t)
            w.rs.maps[p].push_back(random_scores(cells, cells, 100 + p * 7 + t));
    w.mask = BlobMask(cells * 8, cells * 8);
    Rng mrng(5);
    for (auto& b : w.mask.bits) b = mrng.uniform() < 0.3 ? 1 : 0;
    return w;
}

}  // namespace

static void DistanceTransform2d(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const ImageGrid score = random_scores(side, side, 11);
    const DeformWeights d{0.1, -0.6, -0.1, -0.8};
    for (auto _ : state) {
        benchmark::DoNotOptimize(distance_transform(score, d, 0.5, -0.5));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(DistanceTransform2d)->RangeMultiplier(2)->Range(16, 256)->Complexity();

static void MessagePassing(benchmark::State& state) {
    const BenchWorld w = make_world(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(pass_messages(w.rs, w.m, nullptr, false));
    }
}
BENCHMARK(MessagePassing)->Arg(20)->Arg(40);

static void MessagePassingGated(benchmark::State& state) {
    const BenchWorld w = make_world(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(pass_messages(w.rs, w.m, &w.mask, true, 0.2));
    }
}
BENCHMARK(MessagePassingGated)->Arg(20)->Arg(40);
