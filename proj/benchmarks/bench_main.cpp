// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <sstream>

#include "pfa/code_model.hpp"
#include "pfa/config.hpp"
#include "pfa/fpe.hpp"
#include "pfa/pipeline.hpp"
#include "pfa/report.hpp"

namespace {

using namespace pfa;

struct Corpus {
    RunConfig config;
    CodeIndex index{"."};
    std::vector<Warning> warnings;
};

const Corpus& corpus() {
    static const Corpus c = [] {
        Corpus out;
        out.config = load_run_config(std::filesystem::path(PFA_BENCH_FIXTURES) / "corpus.toml");
        out.index = build_index(out.config.project_root);
        for (const auto& r : out.config.reports) {
            for (auto& w : parse_report(r.path, r.format, out.index).warnings) out.warnings.push_back(std::move(w));
        }
        return out;
    }();
    return c;
}

// One function with `n` sequential guarded early exits and a nested if chain.
std::string synthetic_function(int n) {
    std::ostringstream s;
    s << "int big(int *p, int a) {\n";
    for (int i = 0; i < n; ++i) {
        s << "    if (a == " << i << ") {\n        if (p) return " << i << ";\n        a = a + 1;\n    }\n";
    }
    s << "    return *p;\n}\n";
    return s.str();
}

void BM_IndexProject(benchmark::State& state) {
    const auto root = corpus().config.project_root;
    for (auto _ : state) benchmark::DoNotOptimize(build_index(root));
}
BENCHMARK(BM_IndexProject);

void BM_BuildCfg(benchmark::State& state) {
    CodeIndex index(".");
    index.add_file("big.c", synthetic_function(static_cast<int>(state.range(0))));
    const FunctionDef def = index.functions().at("big").at(0);
    for (auto _ : state) benchmark::DoNotOptimize(build_cfg(def));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildCfg)->RangeMultiplier(4)->Range(4, 256)->Complexity();

void BM_ExtractFpe(benchmark::State& state) {
    const auto& c = corpus();
    std::vector<std::pair<FunctionCfg, SegmentSpec>> work;
    for (const auto& w : c.warnings) {
        for (const auto& seg : segment_trace(w, c.index)) {
            work.emplace_back(build_cfg(retrieve_function(c.index, seg.function.name, seg.function.file)), seg);
        }
    }
    for (auto _ : state) {
        for (const auto& [cfg, seg] : work) benchmark::DoNotOptimize(compute_fpe(extract_critical_branches(cfg, seg)));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(work.size()));
}
BENCHMARK(BM_ExtractFpe);

void BM_AnalyzeCorpusReplay(benchmark::State& state) {
    const auto& c = corpus();
    ReplayBackend llm(c.config.backend.replay_dir);
    for (auto _ : state) {
        CachingCfgProvider cfgs;
        MemoryStore memory;
        PipelineServices services{&c.index, &cfgs, &llm, &memory,
                                  make_solver_factory("builtin", std::chrono::seconds(10))};
        benchmark::DoNotOptimize(
            analyze_batch(c.warnings, services, c.config.pipeline(), static_cast<std::size_t>(state.range(0))));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(c.warnings.size()));
}
BENCHMARK(BM_AnalyzeCorpusReplay)->Arg(1)->Arg(4)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
