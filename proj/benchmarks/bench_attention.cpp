// Microbenchmarks: conventional vs fair attention forward, full training
// epochs, spectral norm estimation, and SBM generation.

#include <benchmark/benchmark.h>

#include "fairgat/data.hpp"
#include "fairgat/layers.hpp"
#include "fairgat/numerics.hpp"
#include "fairgat/optim.hpp"
#include "fairgat/rng.hpp"
#include "fairgat/train.hpp"

namespace {

using fairgat::Activation;
using fairgat::Graph;
using fairgat::Matrix;

Graph benchmark_graph(int per_group) {
    fairgat::SbmSpec spec;
    spec.group_sizes = {per_group, per_group};
    spec.p_intra = 0.05;
    spec.p_inter = 0.005;
    spec.feature_dim = 8;
    spec.feature_shift = 1.0;
    spec.seed = 7;
    return fairgat::generate_sbm(spec).with_self_loops();
}

fairgat::AttentionLayerParams benchmark_params(int in_dim, int out_dim) {
    fairgat::AttentionLayerParams params;
    params.w = fairgat::glorot_init(in_dim, out_dim, 1);
    params.a = fairgat::glorot_init(2 * out_dim, 1, 2);
    params.activation = {Activation::ReLU};
    return params;
}

void BM_ConventionalAttentionForward(benchmark::State& state) {
    const Graph g = benchmark_graph(static_cast<int>(state.range(0)));
    const auto params = benchmark_params(g.feature_dim(), 32);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fairgat::gat_attention_forward(g.features(), g, params));
    }
}
BENCHMARK(BM_ConventionalAttentionForward)->Arg(250)->Arg(1000);

void BM_FairAttentionForward(benchmark::State& state) {
    const Graph g = benchmark_graph(static_cast<int>(state.range(0)));
    const auto partition = fairgat::build_partition(g);
    const auto params = benchmark_params(g.feature_dim(), 32);
    const double alpha_star =
        fairgat::optimal_inter_attention(partition.r0_chi(), partition.r1_chi(), 0.25);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fairgat::fair_attention_forward(
            g.features(), g, partition, params, alpha_star));
    }
}
BENCHMARK(BM_FairAttentionForward)->Arg(250)->Arg(1000);

void BM_TrainingEpochs(benchmark::State& state) {
    const Graph g = benchmark_graph(250);
    fairgat::RunConfig config;
    config.hidden = 32;
    config.epochs = static_cast<int>(state.range(1));
    config.seeds = {0};
    config.fair.steps = state.range(0) != 0 ? fairgat::parse_steps("all")
                                            : fairgat::parse_steps("none");
    config.fair.alpha_chi_max = 0.25;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fairgat::train_single(config, g, 0));
    }
}
BENCHMARK(BM_TrainingEpochs)->Args({0, 10})->Args({1, 10});

void BM_SpectralNormEstimate(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Matrix w = fairgat::glorot_init(n, n, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fairgat::spectral_norm_estimate(w));
    }
}
BENCHMARK(BM_SpectralNormEstimate)->Arg(32)->Arg(128);

void BM_GenerateSbm(benchmark::State& state) {
    fairgat::SbmSpec spec;
    spec.group_sizes = {static_cast<int>(state.range(0)),
                        static_cast<int>(state.range(0))};
    spec.p_intra = 0.05;
    spec.p_inter = 0.005;
    spec.feature_dim = 8;
    spec.seed = 11;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fairgat::generate_sbm(spec));
    }
}
BENCHMARK(BM_GenerateSbm)->Arg(250)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
