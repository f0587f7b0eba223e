#include "rlcombine/agent.hpp"
#include "rlcombine/embedding.hpp"
#include "rlcombine/synth.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace rlcombine;

namespace {

ForecastPanel synth_panel(Eigen::Index n_models, Eigen::Index periods, std::uint64_t seed) {
    RegimeSpec spec;
    spec.n_models = n_models;
    spec.seed = seed;
    RegimeSpec::Regime regime;
    regime.length = periods;
    for (Eigen::Index a = 0; a < n_models; ++a) {
        regime.model_stds.push_back(0.25 + 0.25 * static_cast<double>(a));
    }
    spec.regimes.push_back(std::move(regime));
    return generate(spec);
}

} // namespace

static void BM_FitPca(benchmark::State& state) {
    const auto p = static_cast<Eigen::Index>(state.range(0));
    const auto t = static_cast<Eigen::Index>(state.range(1));
    std::mt19937_64 rng(7);
    std::normal_distribution<double> dist;
    FeatureMatrix f;
    f.values.resize(p, t);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < t; ++j) f.values(i, j) = dist(rng);
    f.t = t;
    const FeatureMatrix z = standardize(f);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_pca(z, 3, 0.9));
    }
}
BENCHMARK(BM_FitPca)->Args({8, 64})->Args({62, 48})->Args({62, 256});

static void BM_MostSimilar(benchmark::State& state) {
    const auto rows = static_cast<Eigen::Index>(state.range(0));
    std::mt19937_64 rng(11);
    std::normal_distribution<double> dist;
    QTable table(4);
    for (Eigen::Index t = 0; t < rows; ++t) {
        QTableRow row;
        row.t = t;
        row.embedding.t = t;
        row.embedding.scores = Eigen::VectorXd::NullaryExpr(3, [&](Eigen::Index) {
            return dist(rng);
        });
        row.q = ActionValues::unobserved(4);
        table.append(std::move(row));
    }
    StateEmbedding cur;
    cur.t = rows;
    cur.scores = Eigen::VectorXd::NullaryExpr(3, [&](Eigen::Index) { return dist(rng); });
    for (auto _ : state) {
        benchmark::DoNotOptimize(most_similar(cur, table));
    }
}
BENCHMARK(BM_MostSimilar)->Arg(64)->Arg(512)->Arg(4096);

static void BM_FullRun(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    const auto periods = static_cast<Eigen::Index>(state.range(1));
    const ForecastPanel panel = synth_panel(n, periods, 3);
    AgentConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run(panel, cfg));
    }
}
BENCHMARK(BM_FullRun)->Args({4, 128})->Args({8, 256})->Args({62, 48});

BENCHMARK_MAIN();
