// Microbenchmarks for the hot loops. Green tables come from $BRWLAB_CACHE_DIR.

#include <benchmark/benchmark.h>

#include <map>
#include <vector>

#include "brwlab/brw.hpp"
#include "brwlab/cap_continuum.hpp"
#include "brwlab/cap_discrete.hpp"
#include "brwlab/escape.hpp"
#include "brwlab/green.hpp"
#include "brwlab/gw_sampler.hpp"

namespace {

using namespace brwlab;

const GreenTable& table(int dim) {
    static std::map<int, GreenTable> tables;
    auto it = tables.find(dim);
    if (it == tables.end()) it = tables.emplace(dim, GreenTable::load_or_build(dim)).first;
    return it->second;
}

RangeSet sample_range(int dim, std::int64_t n, std::uint64_t seed) {
    Rng rng(seed);
    const auto tree = sample_conditioned_tree(OffspringDistribution::geometric_half(), n, rng);
    return range(assign_positions(tree, StepDistribution::srw(dim), rng));
}

void BM_GreenRow(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    const auto& g = table(dim);
    const auto r = sample_range(dim, 1 << 14, 1);
    const SiteColumns cols(dim, r.sites());
    std::vector<double> out(cols.size());
    std::size_t i = 0;
    for (auto _ : state) {
        g.evaluate_row(cols, i, 0, cols.size(), out.data());
        benchmark::DoNotOptimize(out.data());
        i = (i + 97) % cols.size();
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cols.size()));
}
BENCHMARK(BM_GreenRow)->Arg(3)->Arg(5);

void BM_GreenLookup(benchmark::State& state) {
    const auto& g = table(3);
    Rng rng(2);
    std::vector<Site> xs(4096);
    for (auto& x : xs) {
        for (int i = 0; i < 3; ++i) x[i] = static_cast<std::int32_t>(rng.below(160)) - 80;
    }
    std::size_t k = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(g(xs[k]));
        k = (k + 1) & 4095;
    }
}
BENCHMARK(BM_GreenLookup);

void BM_CapExact(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    const auto& g = table(dim);
    const auto r = sample_range(dim, state.range(1), 3);
    for (auto _ : state) benchmark::DoNotOptimize(cap_exact(r, g).capacity);
    state.counters["sites"] = static_cast<double>(r.count());
}
BENCHMARK(BM_CapExact)->Args({3, 1 << 12})->Args({5, 1 << 12})->Args({4, 1 << 14})->Unit(benchmark::kMillisecond);

void BM_EscapeWalk(benchmark::State& state) {
    const auto r = sample_range(3, 1 << 14, 4);
    const EscapeEngine engine(3, r.sites());
    const double kill = 8.0 * r.max_norm();
    Rng rng(5);
    const auto& sites = r.sites();
    std::int64_t moves = 0;
    for (auto _ : state) {
        const auto out = engine.run_after_step(sites[rng.below(sites.size())], kill, rng);
        moves += out.moves;
        benchmark::DoNotOptimize(out.escaped);
    }
    state.counters["moves/walk"] = benchmark::Counter(static_cast<double>(moves), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_EscapeWalk);

void BM_ConditionedTree(benchmark::State& state) {
    Rng rng(6);
    const auto dist = OffspringDistribution::geometric_half();
    for (auto _ : state) benchmark::DoNotOptimize(sample_conditioned_tree(dist, state.range(0), rng).size());
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConditionedTree)->Arg(1 << 12)->Arg(1 << 16)->Unit(benchmark::kMicrosecond);

void BM_WalkOnSpheres(benchmark::State& state) {
    const auto r = sample_range(3, 1 << 14, 7);
    const auto cloud = PointCloud::rescaled_range(r, std::pow(double(1 << 14), -0.25), 0.05);
    Rng rng(8);
    for (auto _ : state) benchmark::DoNotOptimize(cap_newtonian(cloud, 100, rng).value);
    state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_WalkOnSpheres)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
