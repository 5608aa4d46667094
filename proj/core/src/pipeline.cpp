// SPDX-License-Identifier: Apache-2.0
#include "pfa/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

#include "pfa/error.hpp"

namespace pfa {

using Clock = std::chrono::steady_clock;

std::string to_string(VerdictResult r) {
    switch (r) {
        case VerdictResult::Feasible: return "Feasible";
        case VerdictResult::Infeasible: return "Infeasible";
        case VerdictResult::UnknownKeptAsAlarm: return "Unknown-KeptAsAlarm";
    }
    return "Unknown-KeptAsAlarm";
}

VerdictResult verdict_result_from_string(const std::string& s) {
    if (s == "Feasible") return VerdictResult::Feasible;
    if (s == "Infeasible") return VerdictResult::Infeasible;
    if (s == "Unknown-KeptAsAlarm") return VerdictResult::UnknownKeptAsAlarm;
    throw Error(ErrorCode::ParseError, "unknown verdict '" + s + "'");
}

nlohmann::json verdict_json(const Verdict& v) {
    nlohmann::json j{{"warning_id", v.warning_id}, {"result", to_string(v.result)}};
    j["deciding_segment"] = v.deciding_segment ? nlohmann::json(*v.deciding_segment) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json cost_json(const Verdict& v) {
    return {{"warning_id", v.warning_id},
            {"llm_calls", v.cost.llm_calls},
            {"solver_calls", v.cost.solver_calls},
            {"wall_time_s", v.cost.wall_time_s},
            {"segments_analyzed", v.segments_analyzed},
            {"diagnostics", v.diagnostics}};
}

Verdict verdict_from_json(const nlohmann::json& j) {
    Verdict v;
    v.warning_id = j.at("warning_id").get<std::string>();
    v.result = verdict_result_from_string(j.at("result").get<std::string>());
    if (j.contains("deciding_segment") && !j["deciding_segment"].is_null()) {
        v.deciding_segment = j["deciding_segment"].get<std::size_t>();
    }
    return v;
}

std::vector<Verdict> read_verdicts_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read " + path.string());
    std::vector<Verdict> out;
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(verdict_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

namespace {

const std::vector<std::pair<Boundary, std::string>>& boundary_names() {
    static const std::vector<std::pair<Boundary, std::string>> names{
        {Boundary::CodeModel, "code-model"}, {Boundary::Fpe, "fpe"},
        {Boundary::RangeLlm, "range-llm"},   {Boundary::SmtLlm, "smt-llm"},
        {Boundary::RepairLlm, "repair-llm"}, {Boundary::Solver, "solver"},
        {Boundary::Propagation, "propagation"}};
    return names;
}

}  // namespace

std::string to_string(Boundary b) {
    for (const auto& [k, n] : boundary_names()) {
        if (k == b) return n;
    }
    return "?";
}

Boundary boundary_from_string(const std::string& s) {
    for (const auto& [k, n] : boundary_names()) {
        if (n == s) return k;
    }
    throw Error(ErrorCode::ConfigError, "unknown fault boundary '" + s + "'");
}

const std::vector<Boundary>& all_boundaries() {
    static const std::vector<Boundary> all = [] {
        std::vector<Boundary> v;
        for (const auto& [k, n] : boundary_names()) v.push_back(k);
        return v;
    }();
    return all;
}

void FaultPlan::check(Boundary b) const {
    if (armed(b)) throw Error(ErrorCode::InjectedFault, "fault injected at " + to_string(b));
}

FaultInjectingBackend::FaultInjectingBackend(LlmBackend& inner, FaultPlan plan) : inner_(inner), plan_(std::move(plan)) {}

std::string FaultInjectingBackend::dispatch(const PromptTemplate& t, const Fills& fills, const std::string& prompt) {
    switch (t.id) {
        case TemplateId::VarRange:
        case TemplateId::CallRange: plan_.check(Boundary::RangeLlm); break;
        case TemplateId::SmtConvert:
        case TemplateId::SmtMerge: plan_.check(Boundary::SmtLlm); break;
        case TemplateId::SmtFix: plan_.check(Boundary::RepairLlm); break;
    }
    return inner_.dispatch(t, fills, prompt);
}

std::shared_ptr<const FunctionCfg> CachingCfgProvider::cfg(const FunctionDef& def) {
    const std::string key = def.file + "\n" + def.name + "\n" + std::to_string(def.begin_line);
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    auto built = std::make_shared<const FunctionCfg>(build_cfg(def));
    std::lock_guard lock(mutex_);
    return cache_.emplace(key, std::move(built)).first->second;
}

namespace {

class FaultySolver final : public SolverHandle {
public:
    SolverReply run(const std::string&) override {
        throw Error(ErrorCode::InjectedFault, "fault injected at solver");
    }
    [[nodiscard]] std::string name() const override { return "faulty"; }
};

struct Budget {
    const PipelineConfig& config;
    const CallLog& log;
    Clock::time_point start;

    void check() const {
        if (log.total() > config.max_llm_calls) {
            throw Error(ErrorCode::BudgetExhausted, "LLM call budget of " + std::to_string(config.max_llm_calls) + " spent");
        }
        if (Clock::now() - start > config.max_wall) throw Error(ErrorCode::BudgetExhausted, "wall time budget spent");
    }
};

// Refuses prompts once the warning's call or time budget is spent.
class BudgetedBackend final : public LlmBackend {
public:
    BudgetedBackend(LlmBackend& inner, const PipelineConfig& config, Clock::time_point start)
        : inner_(inner), config_(config), start_(start) {}

    std::string dispatch(const PromptTemplate& t, const Fills& fills, const std::string& prompt) override {
        if (sent_ >= config_.max_llm_calls) refuse("LLM call budget of " + std::to_string(config_.max_llm_calls) + " spent");
        if (Clock::now() - start_ > config_.max_wall) refuse("wall time budget spent");
        ++sent_;
        return inner_.dispatch(t, fills, prompt);
    }
    [[nodiscard]] BackendKind kind() const override { return inner_.kind(); }
    [[nodiscard]] std::string model_name() const override { return inner_.model_name(); }

    [[nodiscard]] bool exhausted() const { return refused_ > 0; }
    [[nodiscard]] std::size_t refused() const { return refused_; }
    [[nodiscard]] const std::string& reason() const { return reason_; }

private:
    [[noreturn]] void refuse(const std::string& why) {
        if (refused_++ == 0) reason_ = why;
        throw Error(ErrorCode::BudgetExhausted, why);
    }

    LlmBackend& inner_;
    const PipelineConfig& config_;
    Clock::time_point start_;
    std::size_t sent_ = 0;
    std::size_t refused_ = 0;
    std::string reason_;
};

struct SegmentOutcome {
    SatResult result = SatResult::SAT;
    bool unknown = false;  // the segment cannot be decided: keep the alarm
    std::vector<FeasiblePathConstraint> merged;
};

void merge_hints(SortMap& into, const SortMap& from) {
    for (const auto& [k, v] : from) into.emplace(k, v);
}

// Streams constraints into one session until UNSAT or exhaustion.
SegmentOutcome solve_segment(const Fpe& fpe, const InitialStates& p, ReasoningContext& ctx, LlmBackend& llm,
                             SolverHandle& solver, const PipelineConfig& config, const Budget& budget,
                             SegmentRecord& record, std::vector<std::string>& diagnostics) {
    SegmentOutcome out;
    ConstraintStream stream = assemble_constraints(fpe, p, ctx);
    if (stream.infeasible()) {
        diagnostics.push_back("segment " + std::to_string(record.index) + ": sink unreachable from the entry point");
        out.result = SatResult::UNSAT;
        return out;
    }
    SortMap hints = sort_hints(p, ctx.target_var, ctx.aliases);
    SmtNotes notes;
    SolveSession session;
    session.max_repairs = config.repair_rounds;
    session.script.template_text = generate_template(stream.preview(), llm, hints, &notes);
    for (const auto& d : notes.diagnostics) diagnostics.push_back(d);
    if (notes.degraded) ctx.stats.degraded = true;
    merge_hints(hints, session.sorts());

    auto finish = [&](SatResult r) {
        record.script = session.script.merged();
        record.verdicts = session.verdicts;
        record.repair_attempts = static_cast<std::size_t>(session.repair_attempts);
        for (const auto& d : session.diagnostics) diagnostics.push_back("solver: " + d);
        out.result = r;
        if (session.failed) {
            out.unknown = true;
            diagnostics.push_back("segment " + std::to_string(record.index) + ": script repair limit reached");
        }
        return out;
    };

    SatResult last = SatResult::SAT;
    const std::string p_block = initial_states_block(p, hints);
    if (!p_block.empty()) {
        merge_block(session, p_block, hints);
        last = solve_session(session, solver, &llm);
        if (last == SatResult::UNSAT || session.failed) return finish(last);
    }

    if (config.batch_solve) {
        std::vector<FeasiblePathConstraint> all;
        while (auto c = stream.next()) {
            budget.check();
            all.push_back(*c);
        }
        if (all.empty()) {
            if (session.verdicts.empty()) last = solve_session(session, solver, &llm);
            return finish(last);
        }
        SortMap batch_hints = hints;
        for (const auto& c : all) merge_hints(batch_hints, sort_hints({}, "", {}, c.ranges));
        std::vector<std::string> blocks;
        try {
            blocks = convert_batch(all, llm, batch_hints);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ConversionUnparseable && e.code() != ErrorCode::BackendError &&
                e.code() != ErrorCode::ReplayMiss && e.code() != ErrorCode::InjectedFault) {
                throw;
            }
            // One unusable answer loses the whole script.
            diagnostics.push_back("batch conversion failed: " + std::string(e.what()));
            out.unknown = true;
            return finish(SatResult::UNKNOWN);
        }
        for (const auto& b : blocks) merge_block(session, b, batch_hints);
        out.merged = all;
        last = solve_session(session, solver, &llm);
        return finish(last);
    }

    while (auto c = stream.next()) {
        budget.check();
        SortMap block_hints = hints;
        merge_hints(block_hints, sort_hints({}, "", {}, c->ranges));
        std::string block;
        try {
            block = convert_constraint(*c, llm, block_hints);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ConversionUnparseable) {
                diagnostics.push_back("skipped `" + c->expr.text + "`: " + e.what());
                continue;
            }
            if (e.code() == ErrorCode::BackendError || e.code() == ErrorCode::ReplayMiss ||
                e.code() == ErrorCode::InjectedFault) {
                diagnostics.push_back("skipped `" + c->expr.text + "`: " + e.what());
                ctx.stats.degraded = true;
                continue;
            }
            throw;
        }
        merge_block(session, block, block_hints);
        out.merged.push_back(*c);
        last = solve_session(session, solver, &llm);
        if (last == SatResult::UNSAT || session.failed) return finish(last);
    }
    if (session.verdicts.empty()) last = solve_session(session, solver, &llm);
    return finish(last);
}

CallInfo exit_call_info(const SegmentSpec& seg, const std::string& callee) {
    if (auto c = call_on_line(seg.exit_call->site.expr_text, callee)) return *c;
    return CallInfo{callee, {}, callee + "()"};
}

void record_exchanges(const CallLog& log, std::size_t from, SegmentRecord& record) {
    for (std::size_t i = from; i < log.exchanges.size(); ++i) record.exchanges.push_back(log.exchanges[i]);
}

}  // namespace

WarningAnalysis analyze_warning(const Warning& w, const PipelineServices& services, const PipelineConfig& config) {
    const auto start = Clock::now();
    WarningAnalysis out;
    Verdict& v = out.verdict;
    v.warning_id = w.id;
    CallLog log;
    ScopedCallLog scope(log);
    std::unique_ptr<FaultInjectingBackend> faulty_llm;
    LlmBackend* llm = services.llm;
    if (!config.faults.at.empty()) {
        faulty_llm = std::make_unique<FaultInjectingBackend>(*services.llm, config.faults);
        llm = faulty_llm.get();
    }
    BudgetedBackend budgeted(*llm, config, start);
    llm = &budgeted;
    const Budget budget{config, log, start};
    bool degraded = false;
    try {
        const CodeIndex& index = *services.index;
        config.faults.check(Boundary::CodeModel);
        const auto segments = segment_trace(w, index);
        InitialStates p;
        std::optional<VerdictResult> decided;
        for (std::size_t i = 0; i < segments.size() && !decided; ++i) {
            budget.check();
            const SegmentSpec& seg = segments[i];
            ++v.segments_analyzed;
            SegmentRecord record;
            record.index = i;
            record.function = seg.function;
            record.target_var = seg.target_var;
            const std::size_t log_mark = log.exchanges.size();

            p.assumptions.clear();
            if (w.bug_type == BugType::NPD) p.assumptions.push_back(seg.target_var + " == NULL");

            const FunctionDef def = retrieve_function(index, seg.function.name, seg.function.file);
            const auto cfg = services.cfgs->cfg(def);
            config.faults.check(Boundary::Fpe);
            record.fpe = compute_fpe(extract_critical_branches(*cfg, seg));

            ReasoningContext ctx;
            ctx.index = &index;
            ctx.llm = llm;
            ctx.memory = services.memory;
            ctx.body = &def;
            ctx.target_var = seg.target_var;
            if (i == 0) ctx.aliases = w.pair.aliases;
            ctx.limits = config.limits;

            std::unique_ptr<SolverHandle> solver =
                config.faults.armed(Boundary::Solver) ? std::make_unique<FaultySolver>() : services.solvers();
            SegmentOutcome seg_out;
            try {
                seg_out = solve_segment(record.fpe, p, ctx, *llm, *solver, config, budget, record, v.diagnostics);
            } catch (...) {
                record.stats = ctx.stats;
                record_exchanges(log, log_mark, record);
                out.segments.push_back(std::move(record));
                throw;
            }
            v.cost.solver_calls += record.verdicts.size();
            for (const auto& d : ctx.stats.diagnostics) v.diagnostics.push_back(d);
            degraded = degraded || ctx.stats.degraded;
            record.stats = ctx.stats;
            record_exchanges(log, log_mark, record);
            out.segments.push_back(std::move(record));

            if (seg_out.unknown) {
                decided = VerdictResult::UnknownKeptAsAlarm;
            } else if (seg_out.result == SatResult::UNSAT) {
                v.deciding_segment = i;
                decided = VerdictResult::Infeasible;
            } else if (i + 1 < segments.size()) {
                config.faults.check(Boundary::Propagation);
                p.propagated.clear();
                if (seg.exit_call) {
                    const FunctionRef& next = segments[i + 1].function;
                    const FunctionDef callee = retrieve_function(index, next.name, next.file);
                    p.propagated = propagate_constraints(seg_out.merged, exit_call_info(seg, next.name), callee);
                }
            }
        }
        if (!decided) decided = VerdictResult::Feasible;
        v.result = *decided;
        if (budgeted.exhausted() && v.result != VerdictResult::UnknownKeptAsAlarm) {
            throw Error(ErrorCode::BudgetExhausted, budgeted.reason());
        }
        if (degraded && v.result != VerdictResult::UnknownKeptAsAlarm) {
            v.diagnostics.push_back("analysis degraded by an infrastructure failure; alarm kept");
            v.result = VerdictResult::UnknownKeptAsAlarm;
            v.deciding_segment.reset();
        }
    } catch (const Error& e) {
        v.result = VerdictResult::UnknownKeptAsAlarm;
        v.deciding_segment.reset();
        v.diagnostics.push_back(e.what());
    } catch (const std::exception& e) {
        v.result = VerdictResult::UnknownKeptAsAlarm;
        v.deciding_segment.reset();
        v.diagnostics.push_back(std::string("internal error: ") + e.what());
    }
    v.cost.llm_calls = log.total() - budgeted.refused();
    v.cost.wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
    return out;
}

std::vector<WarningAnalysis> analyze_batch(const std::vector<Warning>& warnings, const PipelineServices& services,
                                           const PipelineConfig& config, std::size_t parallelism) {
    std::vector<WarningAnalysis> results(warnings.size());
    if (warnings.empty()) return results;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < warnings.size(); i = next++) {
            results[i] = analyze_warning(warnings[i], services, config);
        }
    };
    const std::size_t n = std::clamp<std::size_t>(parallelism, 1, warnings.size());
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    return results;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
        out << text;
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

void write_run_dir(const std::filesystem::path& dir, const std::vector<WarningAnalysis>& results) {
    std::filesystem::create_directories(dir);
    std::string verdicts;
    std::string costs;
    std::map<std::string, std::string> llm_files;
    for (const auto& r : results) {
        verdicts += verdict_json(r.verdict).dump() + "\n";
        costs += cost_json(r.verdict).dump() + "\n";
        for (const auto& s : r.segments) {
            const auto seg_dir = dir / "segments" / r.verdict.warning_id / std::to_string(s.index);
            nlohmann::json fpe = to_json(s.fpe);
            fpe["function"] = s.function.name;
            fpe["file"] = s.function.file;
            fpe["target_var"] = s.target_var;
            write_text(seg_dir / "fpe.json", fpe.dump(2) + "\n");
            if (!s.script.empty()) write_text(seg_dir / "script.smt2", s.script);
            std::filesystem::create_directories(seg_dir / "transcript");
            for (std::size_t k = 0; k < s.exchanges.size(); ++k) {
                const auto& e = s.exchanges[k];
                char prefix[8];
                std::snprintf(prefix, sizeof prefix, "%03zu", k);
                const std::string body = to_json(e).dump(2) + "\n";
                write_text(seg_dir / "transcript" / (std::string(prefix) + "-" + e.hash + ".json"), body);
                llm_files.emplace(e.hash, body);
            }
        }
    }
    write_text(dir / "verdicts.jsonl", verdicts);
    write_text(dir / "costs.jsonl", costs);
    for (const auto& [hash, body] : llm_files) write_text(dir / "llm" / (hash + ".json"), body);
}

}  // namespace pfa
