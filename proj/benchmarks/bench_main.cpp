#include "idxadvis/features.hpp"
#include "idxadvis/heuristics.hpp"
#include "idxadvis/llm.hpp"
#include "idxadvis/prompt.hpp"
#include "idxadvis/scaling.hpp"
#include "idxadvis/sim_backend.hpp"

#include <benchmark/benchmark.h>

using namespace idxadvis;

namespace {

struct Tpch {
    Catalog catalog = Catalog::load(IDXADVIS_BENCH_DATA "/tpch_catalog.json");
    Workload workload = load_workload(IDXADVIS_BENCH_DATA "/tpch19.sql");
    SimulatedBackend backend{catalog};
    WorkloadFeatures features = extract_workload_features(workload, catalog, backend.selectivity());
    CandidateSet candidates = generate_candidates(features, 2);
};

const Tpch& tpch() {
    static Tpch t;
    return t;
}

}  // namespace

static void BM_ParseWorkload(benchmark::State& state) {
    const auto& t = tpch();
    for (auto _ : state)
        for (const auto& q : t.workload.queries) benchmark::DoNotOptimize(parse_query(q, t.catalog));
    state.SetItemsProcessed(state.iterations() * t.workload.queries.size());
}
BENCHMARK(BM_ParseWorkload);

static void BM_ExtractFeatures(benchmark::State& state) {
    const auto& t = tpch();
    for (auto _ : state)
        benchmark::DoNotOptimize(extract_workload_features(t.workload, t.catalog, t.backend.selectivity()));
}
BENCHMARK(BM_ExtractFeatures);

static void BM_WorkloadCost(benchmark::State& state) {
    const auto& t = tpch();
    auto s = t.backend.open_session();
    for (std::size_t i = 0; i < static_cast<std::size_t>(state.range(0)) && i < t.candidates.candidates.size(); ++i)
        s->create(t.candidates.candidates[i]);
    for (auto _ : state) benchmark::DoNotOptimize(s->estimate(t.workload));
}
BENCHMARK(BM_WorkloadCost)->Arg(0)->Arg(8)->Arg(32);

static void BM_GreedyAdvisor(benchmark::State& state) {
    const auto& t = tpch();
    double budget = 0.01 * state.range(0) * t.backend.database_size_mb();
    for (auto _ : state) {
        auto s = t.backend.open_session();
        benchmark::DoNotOptimize(greedy_advisor(*s, t.workload, t.candidates, budget));
    }
}
BENCHMARK(BM_GreedyAdvisor)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

static void BM_Voting(benchmark::State& state) {
    const auto& t = tpch();
    std::vector<std::vector<IndexAction>> options;
    std::size_t k = 0;
    for (std::int64_t i = 0; i < state.range(0); ++i) {
        std::vector<IndexAction> opt;
        for (std::size_t j = 0; j < 6; ++j, ++k)
            opt.push_back(IndexAction::create(t.candidates.candidates[k % t.candidates.candidates.size()]));
        options.push_back(std::move(opt));
    }
    for (auto _ : state) benchmark::DoNotOptimize(index_guided_major_voting(tally(options)));
}
BENCHMARK(BM_Voting)->Arg(8)->Arg(32);

static void BM_SelfOptimizeZeroShot(benchmark::State& state) {
    const auto& t = tpch();
    for (auto _ : state) {
        MockLLM llm(0);
        OptimizeInputs in;
        in.backend = &t.backend;
        in.llm = &llm;
        in.workload = &t.workload;
        in.features = &t.features;
        OptimizeConfig cfg;
        cfg.sampling.n_samples = static_cast<std::size_t>(state.range(0));
        cfg.threads = 1;
        benchmark::DoNotOptimize(self_optimize(in, 0.3 * t.backend.database_size_mb(), cfg));
    }
}
BENCHMARK(BM_SelfOptimizeZeroShot)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
