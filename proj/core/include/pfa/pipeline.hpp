// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfa/code_model.hpp"
#include "pfa/fpe.hpp"
#include "pfa/llm.hpp"
#include "pfa/range.hpp"
#include "pfa/report.hpp"
#include "pfa/smt.hpp"
#include "pfa/solver.hpp"

namespace pfa {

enum class VerdictResult { Feasible, Infeasible, UnknownKeptAsAlarm };
std::string to_string(VerdictResult r);
VerdictResult verdict_result_from_string(const std::string& s);

struct VerdictCost {
    std::size_t llm_calls = 0;
    std::size_t solver_calls = 0;
    double wall_time_s = 0.0;
};

struct Verdict {
    std::string warning_id;
    VerdictResult result = VerdictResult::UnknownKeptAsAlarm;
    std::optional<std::size_t> deciding_segment;  // 0-based
    VerdictCost cost;
    std::vector<std::string> diagnostics;
    /// Segments whose analysis started.
    std::size_t segments_analyzed = 0;
};

/// Only the fields that are stable across runs: id, result, deciding segment.
nlohmann::json verdict_json(const Verdict& v);
/// Cost and diagnostics, which depend on cache timing.
nlohmann::json cost_json(const Verdict& v);
Verdict verdict_from_json(const nlohmann::json& j);
std::vector<Verdict> read_verdicts_jsonl(const std::filesystem::path& path);

/// Module boundaries where a failure can be injected.
enum class Boundary { CodeModel, Fpe, RangeLlm, SmtLlm, RepairLlm, Solver, Propagation };
std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);
const std::vector<Boundary>& all_boundaries();

struct FaultPlan {
    std::set<Boundary> at;
    [[nodiscard]] bool armed(Boundary b) const { return at.contains(b); }
    /// Throws InjectedFault when armed.
    void check(Boundary b) const;
};

/// Wraps a backend and throws InjectedFault for templates on armed boundaries.
class FaultInjectingBackend final : public LlmBackend {
public:
    FaultInjectingBackend(LlmBackend& inner, FaultPlan plan);
    std::string dispatch(const PromptTemplate& t, const Fills& fills, const std::string& prompt) override;
    [[nodiscard]] BackendKind kind() const override { return inner_.kind(); }
    [[nodiscard]] std::string model_name() const override { return inner_.model_name(); }

private:
    LlmBackend& inner_;
    FaultPlan plan_;
};

/// CFGs built once per function and shared across warnings.
class CfgProvider {
public:
    virtual ~CfgProvider() = default;
    virtual std::shared_ptr<const FunctionCfg> cfg(const FunctionDef& def) = 0;
};

class CachingCfgProvider final : public CfgProvider {
public:
    std::shared_ptr<const FunctionCfg> cfg(const FunctionDef& def) override;

private:
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const FunctionCfg>> cache_;
};

struct PipelineConfig {
    ReasonerLimits limits;
    int repair_rounds = 3;
    bool batch_solve = false;
    std::size_t max_llm_calls = 200;
    std::chrono::milliseconds max_wall{std::chrono::minutes(5)};
    FaultPlan faults;
};

/// Everything a warning's analysis reads or shares.
struct PipelineServices {
    const CodeIndex* index = nullptr;
    CfgProvider* cfgs = nullptr;
    LlmBackend* llm = nullptr;
    MemoryStore* memory = nullptr;
    SolverFactory solvers;
};

/// What one segment's analysis produced, for the run directory.
struct SegmentRecord {
    std::size_t index = 0;
    FunctionRef function;
    std::string target_var;
    Fpe fpe;
    std::string script;
    std::vector<SatResult> verdicts;
    std::vector<Exchange> exchanges;
    ReasonerStats stats;
    std::size_t repair_attempts = 0;
};

struct WarningAnalysis {
    Verdict verdict;
    std::vector<SegmentRecord> segments;
};

WarningAnalysis analyze_warning(const Warning& w, const PipelineServices& services, const PipelineConfig& config);

/// Verdicts in input order, computed by `parallelism` workers.
std::vector<WarningAnalysis> analyze_batch(const std::vector<Warning>& warnings, const PipelineServices& services,
                                           const PipelineConfig& config, std::size_t parallelism);

/// Writes verdicts.jsonl, costs.jsonl, segments/<warning>/<i>/ and llm/.
void write_run_dir(const std::filesystem::path& dir, const std::vector<WarningAnalysis>& results);

}  // namespace pfa
