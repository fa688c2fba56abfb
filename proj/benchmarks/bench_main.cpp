#include <benchmark/benchmark.h>

#include <random>

#include "spliceloc/features/frame_features.hpp"
#include "spliceloc/metrics/metrics.hpp"
#include "spliceloc/model/network.hpp"
#include "spliceloc/model/parameters.hpp"
#include "spliceloc/mp3/codec_record.hpp"
#include "spliceloc/train/trainer.hpp"

using namespace spliceloc;

namespace {

train::Example make_example(const model::ModelConfig& c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    auto fill = [&](model::Matrix& m, int cols) {
        m.resize(c.L, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    };
    train::Example ex;
    fill(ex.input.mdct, c.cnn1.rows * c.cnn1.cols);
    fill(ex.input.scalefac, c.cnn2.rows * c.cnn2.cols);
    fill(ex.input.scalars, c.n_scalars);
    for (int l = 0; l < c.L; ++l) ex.labels.push_back(static_cast<std::uint8_t>(rng() & 1));
    return ex;
}

model::ModelConfig config_for(int which) {
    return which == 0 ? model::ModelConfig::reduced() : model::ModelConfig::full();
}

}  // namespace

static void BM_ParseStream(benchmark::State& state) {
    const auto bytes = mp3::read_file(SPLICELOC_BENCH_MP3);
    std::size_t frames = 0;
    for (auto _ : state) {
        auto parsed = mp3::parse_stream(bytes);
        frames += parsed.size();
        benchmark::DoNotOptimize(parsed);
    }
    state.counters["frames/s"] = benchmark::Counter(static_cast<double>(frames), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_ParseStream)->Unit(benchmark::kMillisecond);

static void BM_RawFeatures(benchmark::State& state) {
    const auto parsed = mp3::parse_stream(mp3::read_file(SPLICELOC_BENCH_MP3));
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& f = parsed[i++ % parsed.size()];
        if (f.record) benchmark::DoNotOptimize(features::raw_features(*f.record));
    }
}
BENCHMARK(BM_RawFeatures);

// arg 0: reduced model, 1: full model
static void BM_Forward(benchmark::State& state) {
    const auto config = config_for(static_cast<int>(state.range(0)));
    const auto params = model::ModelParameters::initialize(config, 1);
    const auto ex = make_example(config, 2);
    for (auto _ : state) benchmark::DoNotOptimize(model::forward(ex.input, params));
}
BENCHMARK(BM_Forward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_WindowGradient(benchmark::State& state) {
    const auto config = config_for(static_cast<int>(state.range(0)));
    const auto params = model::ModelParameters::initialize(config, 1);
    const std::vector<train::Example> batch{make_example(config, 3)};
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(train::gradients(batch, params, ++seed));
}
BENCHMARK(BM_WindowGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_Evaluate(benchmark::State& state) {
    std::mt19937_64 rng(4);
    const auto n = static_cast<std::size_t>(state.range(0));
    std::vector<metrics::FrameTruth> truth(n);
    std::vector<std::uint8_t> pred(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<int>(rng() % 3) + 1;
        truth[i] = {static_cast<std::uint8_t>(k > 1), k, static_cast<std::uint8_t>(rng() % 12)};
        pred[i] = static_cast<std::uint8_t>(rng() & 1);
    }
    for (auto _ : state) benchmark::DoNotOptimize(metrics::evaluate(truth, pred));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_Evaluate)->Arg(1 << 16);

BENCHMARK_MAIN();
