#include <benchmark/benchmark.h>

#include <fstream>
#include <random>
#include <sstream>

#include "chartinsight/agents.hpp"
#include "chartinsight/analysis.hpp"
#include "chartinsight/metrics.hpp"
#include "chartinsight/patches.hpp"

using namespace chartinsight;

namespace {

std::vector<double> walk(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> step(0, 1);
    std::vector<double> v(n);
    double x = 100;
    for (auto& y : v) y = x += step(rng);
    return v;
}

std::string slurp(const char* name) {
    std::ifstream in(std::string(CHARTINSIGHT_DATA_DIR) + "/fixtures/" + name);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void BM_Segment(benchmark::State& state) {
    const auto v = walk(static_cast<std::size_t>(state.range(0)), 42);
    SegmentationConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(segment(v, cfg));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Segment)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

void BM_Diversity(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0, 1);
    PointSet ps;
    for (int i = 0; i < state.range(0); ++i) {
        std::vector<double> p(64);
        for (auto& x : p) x = g(rng);
        ps.points.push_back(std::move(p));
    }
    for (auto _ : state) benchmark::DoNotOptimize(diversity(ps));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Diversity)->RangeMultiplier(2)->Range(8, 256)->Complexity();

void BM_Embed(benchmark::State& state) {
    std::vector<std::string> s(static_cast<std::size_t>(state.range(0)),
                               "Apple stock rose sharply from 2003 to 2007 before falling in 2008.");
    for (auto _ : state) benchmark::DoNotOptimize(embed(s));
}
BENCHMARK(BM_Embed)->Arg(10)->Arg(100);

void BM_PipelineMock(benchmark::State& state) {
    const auto spec = slurp("stocks.spec.json"), csv = slurp("stocks.csv");
    for (auto _ : state) {
        MockBackend m;
        benchmark::DoNotOptimize(run_pipeline(spec, csv, PipelineConfig{}, m));
    }
}
BENCHMARK(BM_PipelineMock)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
