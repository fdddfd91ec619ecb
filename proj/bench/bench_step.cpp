#include <benchmark/benchmark.h>

#include <vector>

#include "ncdrank/ranking.hpp"
#include "ncdrank/synthetic.hpp"

namespace {

ncd::BlockGraph make_graph(std::size_t n) {
    ncd::BlockGraphParams p;
    p.nodes = n;
    p.blocks = n / 100;
    p.seed = 7;
    return ncd::generate_block_graph(p);
}

template <bool Parallel>
void BM_step(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto bg = make_graph(n);
    ncd::RankingConfig cfg;
    cfg.workers = Parallel ? static_cast<int>(state.range(1)) : 1;
    std::vector<double> pi(n, 1.0 / static_cast<double>(n));
    ncd::RankOperator op(bg.graph, {ncd::build_factors(bg.graph, bg.blocks)}, pi, cfg);
    std::vector<double> out(n);
    for (auto _ : state) {
        if constexpr (Parallel)
            op.apply(pi, out);
        else
            op.apply_reference(pi, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(bg.graph.edge_count()));
}

void BM_step_parallel(benchmark::State& state) { BM_step<true>(state); }
void BM_step_serial_reference(benchmark::State& state) { BM_step<false>(state); }

}  // namespace

BENCHMARK(BM_step_parallel)->ArgsProduct({{10000, 100000, 1000000}, {1, 2, 4, 8}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_step_serial_reference)->Arg(10000)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
