// SPDX-License-Identifier: Apache-2.0
#include "corpus.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace pfa::testing {

std::filesystem::path fixtures_dir() { return PFA_TEST_FIXTURES; }

std::filesystem::path scratch_dir(const std::string& name) {
    static std::atomic<int> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("pfa-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const Warning& Corpus::from(const std::string& function) const {
    for (const auto& w : warnings) {
        if (!w.trace.empty() && w.trace.front().name == function) return w;
    }
    throw std::runtime_error("no corpus warning starts in " + function);
}

ExpertRules Corpus::rules() const { return load_expert_rules(config.backend.rules); }

const Corpus& corpus() {
    static const Corpus c = [] {
        Corpus out;
        out.config = load_run_config(fixtures_dir() / "corpus.toml");
        out.index = build_index(out.config.project_root);
        for (const auto& r : out.config.reports) {
            auto res = parse_report(r.path, r.format, out.index);
            for (auto& w : res.warnings) out.warnings.push_back(std::move(w));
        }
        return out;
    }();
    return c;
}

std::string CountingBackend::dispatch(const PromptTemplate& t, const Fills& fills, const std::string& prompt) {
    {
        std::lock_guard lock(mutex_);
        ++by_template_[t.id];
        if (auto it = fills.find("function_name"); it != fills.end() && t.id == TemplateId::CallRange) {
            ++by_callee_[it->second];
        }
    }
    return inner_.dispatch(t, fills, prompt);
}

std::size_t CountingBackend::dispatched(TemplateId id) const {
    std::lock_guard lock(mutex_);
    auto it = by_template_.find(id);
    return it == by_template_.end() ? 0 : it->second;
}

std::size_t CountingBackend::callee_prompts(const std::string& callee) const {
    std::lock_guard lock(mutex_);
    auto it = by_callee_.find(callee);
    return it == by_callee_.end() ? 0 : it->second;
}

std::vector<WarningAnalysis> analyze(const Corpus& c, const std::vector<Warning>& warnings, LlmBackend& llm,
                                     const PipelineConfig& config, std::size_t parallelism) {
    CachingCfgProvider cfgs;
    MemoryStore memory;
    PipelineServices services;
    services.index = &c.index;
    services.cfgs = &cfgs;
    services.llm = &llm;
    services.memory = &memory;
    services.solvers = make_solver_factory("builtin", std::chrono::seconds(10));
    return analyze_batch(warnings, services, config, parallelism);
}

}  // namespace pfa::testing
