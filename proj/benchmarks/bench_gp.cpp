#include <benchmark/benchmark.h>

#include "partforest/gp.hpp"
#include "partforest/rng.hpp"

using namespace partforest;

namespace {

Eigen::MatrixXd inputs(int n, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd x(n, kPose2dDim);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < kPose2dDim; ++j) x(i, j) = rng.gaussian();
    return x;
}

Eigen::VectorXd targets(const Eigen::MatrixXd& x) {
    Eigen::VectorXd y(x.rows());
    for (int i = 0; i < x.rows(); ++i) y(i) = std::sin(x(i, 0)) + 0.3 * x(i, 1);
    return y;
}

}  // namespace

static void LogMarginalLikelihood(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Eigen::MatrixXd x = inputs(n, 1);
    Eigen::VectorXd y = targets(x);
    y.array() -= y.mean();
    const SeHyperparams h = SeHyperparams::from_values(1.0, 2.0, 0.05);
    for (auto _ : state) {
        benchmark::DoNotOptimize(log_marginal_likelihood(x, y, h));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(LogMarginalLikelihood)->RangeMultiplier(2)->Range(25, 200)->Complexity();

static void GpPredict(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Eigen::MatrixXd x = inputs(n, 2);
    const GpModel m = train_gp_fixed(x, targets(x),
                                     SeHyperparams::from_values(1.0, 2.0, 0.05));
    const Eigen::RowVectorXd q = Eigen::RowVectorXd::Constant(kPose2dDim, 0.3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gp_predict(m, q));
    }
}
BENCHMARK(GpPredict)->Arg(50)->Arg(200);
