// SPDX-License-Identifier: Apache-2.0
// Prints one PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "corpus.hpp"
#include "fpe_oracle.hpp"
#include "pfa/eval.hpp"
#include "pfa/smt.hpp"

namespace {

using namespace pfa;
using namespace pfa::testing;
using Clock = std::chrono::steady_clock;

// Pinned thresholds.
constexpr std::size_t kMinFpeFixtures = 25;
constexpr std::size_t kMaxFixtureBranches = 8;
constexpr double kFpeBudgetSeconds = 5.0;
constexpr std::size_t kMaxTunnelBlocks = 4;
constexpr int kAgentDepth = 5;
constexpr int kRepairCap = 3;
constexpr double kDeterminismBudgetSeconds = 60.0;

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

ReplayBackend replay() { return ReplayBackend(corpus().config.backend.replay_dir); }

const SegmentRecord* deciding(const WarningAnalysis& a) {
    if (!a.verdict.deciding_segment) return nullptr;
    for (const auto& s : a.segments) {
        if (s.index == *a.verdict.deciding_segment) return &s;
    }
    return nullptr;
}

Outcome fpe_oracle() {
    Outcome o;
    const auto start = Clock::now();
    const auto fns = load_marked_corpus(fixtures_dir() / "fpe" / "corpus.c");
    std::size_t mismatched = 0;
    for (const auto& fn : fns) {
        const FunctionCfg cfg = build_cfg(fn.def);
        o.require(cfg.cond_nodes.size() <= kMaxFixtureBranches, fn.def.name + " has too many branches");
        const auto m = check_against_paths(fn);
        if (!m.empty()) {
            ++mismatched;
            o.require(false, describe(m.front()));
        }
    }
    const double secs = seconds_since(start);
    o.require(fns.size() >= kMinFpeFixtures, "only " + std::to_string(fns.size()) + " fixtures");
    o.require(secs < kFpeBudgetSeconds, "took " + std::to_string(secs) + " s");
    if (o.pass) {
        std::ostringstream s;
        s << fns.size() << " functions agree with path enumeration, " << secs << " s";
        o.detail = s.str();
    }
    (void)mismatched;
    return o;
}

Outcome worked_examples() {
    Outcome o;
    auto llm = replay();
    const auto& c = corpus();
    const auto res = analyze(c, {c.from("ip_tunnel_xmit"), c.from("drop_packet")}, llm);
    o.require(res[0].verdict.result == VerdictResult::Infeasible,
              "ip_tunnel_xmit fixture is " + to_string(res[0].verdict.result));
    o.require(res[1].verdict.result == VerdictResult::Infeasible,
              "drop_packet fixture is " + to_string(res[1].verdict.result));
    std::size_t blocks = 0;
    if (const SegmentRecord* seg = deciding(res[0])) {
        o.require(!seg->verdicts.empty() && seg->verdicts.back() == SatResult::UNSAT, "ip_tunnel_xmit session not UNSAT");
        blocks = split_script(seg->script).constraint_blocks.size();
        o.require(blocks <= kMaxTunnelBlocks, "ip_tunnel_xmit session used " + std::to_string(blocks) + " blocks");
    } else {
        o.require(false, "ip_tunnel_xmit has no deciding segment");
    }
    if (o.pass) o.detail = "both Infeasible; ip_tunnel_xmit UNSAT after " + std::to_string(blocks) + " blocks";
    return o;
}

Outcome bounds() {
    Outcome o;
    const auto& c = corpus();

    // Wrapper chain: direct reasoning on w0(dev) under dev == NULL.
    ScriptedBackend expert(expert_responder(c.rules()));
    const FunctionDef probe = retrieve_function(c.index, "probe_dev");
    std::optional<CallInfo> call;
    for (int line = probe.begin_line; line <= probe.end_line && !call; ++line) {
        call = call_on_line(c.index.line_text(probe.file, line), "w0");
    }
    o.require(call.has_value(), "w0 call not found");
    if (call) {
        MemoryStore memory;
        ReasonerStats stats;
        InitialStates p;
        p.assumptions.push_back("dev == NULL");
        const SymbolicRange r = reason_call_range(*call, p, 0, memory, c.index, expert, {}, &stats, probe.file);
        o.require(r.is_unknown(), "w0 range is " + r.describe());
        o.require(stats.depth_cap_hits >= 1, "depth cap never hit");
        o.require(stats.deepest_prompt == kAgentDepth - 1,
                  "deepest prompted depth " + std::to_string(stats.deepest_prompt));
        // Each level asks once, then once more after its callee's answer arrives.
        o.require(stats.call_prompts <= static_cast<std::size_t>(2 * kAgentDepth),
                  std::to_string(stats.call_prompts) + " agent prompts");
    }

    // Same fixture end to end under replay.
    auto llm = replay();
    const auto wrapper = analyze(c, {c.from("probe_dev")}, llm);
    std::size_t cap_hits = 0;
    int deepest = -1;
    for (const auto& s : wrapper[0].segments) {
        cap_hits += s.stats.depth_cap_hits;
        deepest = std::max(deepest, s.stats.deepest_prompt);
    }
    o.require(cap_hits >= 1 && deepest < kAgentDepth, "pipeline run exceeded the depth bound");

    // Repair cap: every repair answer keeps the script broken.
    for (FixMode mode : {FixMode::Echo, FixMode::Garbage}) {
        ExpertRules rules = c.rules();
        rules.fix = mode;
        ScriptedBackend inner(expert_responder(rules));
        CountingBackend counting(inner);
        const auto res = analyze(c, {c.from("poll_port")}, counting);
        std::size_t attempts = 0;
        for (const auto& s : res[0].segments) attempts += s.repair_attempts;
        const std::string tag = mode == FixMode::Echo ? "echo" : "garbage";
        o.require(attempts == static_cast<std::size_t>(kRepairCap),
                  tag + ": " + std::to_string(attempts) + " repair rounds");
        o.require(counting.dispatched(TemplateId::SmtFix) <= static_cast<std::size_t>(kRepairCap),
                  tag + ": " + std::to_string(counting.dispatched(TemplateId::SmtFix)) + " fix prompts");
        o.require(res[0].verdict.result == VerdictResult::UnknownKeptAsAlarm,
                  tag + ": verdict " + to_string(res[0].verdict.result));
    }
    if (o.pass) o.detail = "wrapper chain Unknown at depth 5; 3 repair rounds then Unknown-KeptAsAlarm";
    return o;
}

Outcome early_unsat() {
    Outcome o;
    const auto& c = corpus();
    auto inner = replay();
    CountingBackend llm(inner);
    const auto res = analyze(c, {c.from("early_exit")}, llm);
    const auto& a = res[0];
    o.require(a.verdict.result == VerdictResult::Infeasible, "verdict " + to_string(a.verdict.result));
    o.require(!a.segments.empty() && a.segments[0].fpe.must_hold.size() + a.segments[0].fpe.must_not_fully_hold.size() >= 2,
              "fixture FPE has fewer than two expressions");
    const std::size_t range_calls = llm.dispatched(TemplateId::VarRange) + llm.dispatched(TemplateId::CallRange);
    o.require(range_calls == 0, std::to_string(range_calls) + " range prompts");
    std::size_t counted = 0;
    for (const auto& s : a.segments) counted += s.stats.variable_prompts + s.stats.call_prompts;
    o.require(counted == 0, std::to_string(counted) + " range prompts counted by the reasoner");
    if (o.pass) o.detail = "Infeasible with 0 range prompts";
    return o;
}

Outcome memory_economy() {
    Outcome o;
    const auto& c = corpus();
    for (std::size_t parallelism : {1u, 2u}) {
        auto inner = replay();
        CountingBackend llm(inner);
        const auto res = analyze(c, {c.from("open_a"), c.from("open_b")}, llm, {}, parallelism);
        const std::size_t n = llm.callee_prompts("validate");
        o.require(n == 1, "parallelism " + std::to_string(parallelism) + ": " + std::to_string(n) + " validate prompts");
        std::size_t hits = 0;
        for (const auto& r : res) {
            for (const auto& s : r.segments) hits += s.stats.memory_hits;
        }
        o.require(hits >= 1, "no memory hit recorded");
    }
    if (o.pass) o.detail = "one validate prompt for two warnings (sequential and parallel)";
    return o;
}

Outcome recall_safety() {
    Outcome o;
    const auto& c = corpus();
    ScriptedBackend baseline_llm(expert_responder(c.rules()));
    const auto baseline = analyze(c, c.warnings, baseline_llm);
    std::size_t fired_total = 0;
    for (Boundary b : all_boundaries()) {
        ScriptedBackend llm(expert_responder(c.rules()));
        PipelineConfig config;
        config.faults.at = {b};
        const auto res = analyze(c, c.warnings, llm, config);
        std::size_t fired = 0;
        for (std::size_t i = 0; i < res.size(); ++i) {
            const Verdict& v = res[i].verdict;
            bool hit = false;
            for (const auto& d : v.diagnostics) hit = hit || d.find("InjectedFault") != std::string::npos;
            if (hit) {
                ++fired;
                o.require(v.result == VerdictResult::UnknownKeptAsAlarm,
                          to_string(b) + " fault gave " + to_string(v.result) + " for " + v.warning_id);
            } else {
                o.require(v.result == baseline[i].verdict.result,
                          to_string(b) + " changed " + v.warning_id + " without firing");
            }
        }
        o.require(fired > 0, "no warning crossed the " + to_string(b) + " boundary");
        fired_total += fired;
    }
    PipelineConfig all;
    for (Boundary b : all_boundaries()) all.faults.at.insert(b);
    ScriptedBackend llm(expert_responder(c.rules()));
    for (const auto& r : analyze(c, c.warnings, llm, all)) {
        o.require(r.verdict.result == VerdictResult::UnknownKeptAsAlarm, "all-boundary run kept a non-alarm verdict");
    }
    if (o.pass) {
        o.detail = std::to_string(all_boundaries().size()) + " boundaries, " + std::to_string(fired_total) +
                   " faulted analyses, none Infeasible";
    }
    return o;
}

Outcome metrics_fidelity() {
    Outcome o;
    const auto dir = fixtures_dir() / "eval";
    const auto verdicts = read_verdicts_jsonl(dir / "verdicts.jsonl");
    const auto labels = load_labels(dir / "labels.json");
    o.require(verdicts.size() == 20, "fixture has " + std::to_string(verdicts.size()) + " verdicts");

    // Hand-computed expectations.
    const MetricsReport all = score(verdicts, labels);
    o.require(all.confusion == Confusion{3, 9, 7, 1}, "overall confusion differs");
    o.require(all.acc == Rational(1, 2) && all.pre == Rational(1, 4) && all.rec == Rational(3, 4) &&
                  all.fpr_p == Rational(7, 8) && all.fpr_r == Rational(7, 16),
              "overall metrics differ");

    const auto rows = breakdown(verdicts, labels, GroupBy::BugType, "PFA");
    auto row = [&](const std::string& g) -> const MetricsReport* {
        for (const auto& r : rows) {
            if (r.group == g) return &r.report;
        }
        return nullptr;
    };
    const MetricsReport* npd = row("NPD");
    const MetricsReport* uaf = row("UAF");
    const MetricsReport* bof = row("BOF");
    o.require(npd && uaf && bof && row("All"), "breakdown rows missing");
    if (npd && uaf && bof) {
        o.require(npd->confusion == Confusion{3, 2, 4, 1} && npd->acc == Rational(7, 10) &&
                      npd->pre == Rational(3, 5) && npd->rec == Rational(3, 4) && npd->fpr_p == Rational(4, 5) &&
                      npd->fpr_r == Rational(2, 3),
                  "NPD row differs");
        o.require(uaf->confusion == Confusion{0, 2, 3, 0} && uaf->acc == Rational(3, 5) && !uaf->pre && !uaf->rec &&
                      uaf->fpr_p == Rational(1, 1) && uaf->fpr_r == Rational(3, 5),
                  "UAF row differs");
        o.require(bof->confusion == Confusion{0, 5, 0, 0} && bof->acc == Rational(0, 1) && !bof->pre && !bof->rec &&
                      !bof->fpr_p && bof->fpr_r == Rational(0, 1),
                  "BOF row differs");
    }
    const std::string md = render_markdown(rows, GroupBy::BugType);
    o.require(md.find("| UAF | PFA | 0.60 | 1.00 | 0.60 | / | / | 0 | 2 | 3 | 0 |") != std::string::npos,
              "UAF markdown row differs");
    o.require(md.find("| BOF | PFA | 0.00 | / | 0.00 | / | / | 0 | 5 | 0 | 0 |") != std::string::npos,
              "BOF markdown row differs");
    if (o.pass) o.detail = "20 labeled verdicts match hand-computed rationals; BOF/UAF render '/'";
    return o;
}

Outcome determinism() {
    Outcome o;
    const auto start = Clock::now();
    const auto config = (fixtures_dir() / "corpus.toml").string();
    std::string reference;
    for (const char* parallelism : {"1", "4", "8", "1"}) {
        const auto dir = scratch_dir(std::string("det-") + parallelism);
        std::ostringstream out, err;
        const int rc = cli::run({"analyze", "--config", config, "--run-dir", dir.string(), "--parallelism", parallelism},
                                out, err);
        o.require(rc == 0, std::string("analyze exited ") + std::to_string(rc) + ": " + err.str());
        if (rc != 0) continue;
        const std::string verdicts = read_file(dir / "verdicts.jsonl");
        if (reference.empty()) {
            reference = verdicts;
            o.require(std::count(verdicts.begin(), verdicts.end(), '\n') == 14, "expected 14 verdicts");
        } else {
            o.require(verdicts == reference, std::string("verdicts differ at parallelism ") + parallelism);
        }
        std::filesystem::remove_all(dir);
    }
    const double secs = seconds_since(start);
    o.require(secs < kDeterminismBudgetSeconds, "took " + std::to_string(secs) + " s");
    if (o.pass) {
        std::ostringstream s;
        s << "identical verdicts.jsonl at parallelism 1/4/8 (rerun at 1), " << secs << " s";
        o.detail = s.str();
    }
    return o;
}

Outcome ablations() {
    Outcome o;
    const auto& c = corpus();
    auto infeasible = [](const std::vector<WarningAnalysis>& res) {
        return std::count_if(res.begin(), res.end(),
                             [](const auto& r) { return r.verdict.result == VerdictResult::Infeasible; });
    };
    auto find = [](const std::vector<WarningAnalysis>& res, const std::string& id) -> const Verdict& {
        for (const auto& r : res) {
            if (r.verdict.warning_id == id) return r.verdict;
        }
        throw std::runtime_error("missing verdict " + id);
    };
    auto base_llm = replay();
    const auto base = analyze(c, c.warnings, base_llm);

    PipelineConfig no_context;
    no_context.limits.no_context = true;
    auto nc_llm = replay();
    const auto nc = analyze(c, c.warnings, nc_llm, no_context);
    const Verdict& dropped = find(nc, c.from("drop_packet").id);
    o.require(dropped.result == VerdictResult::Feasible, "no_context drop_packet is " + to_string(dropped.result));
    o.require(infeasible(nc) < infeasible(base), "no_context did not lower the filtered count");

    PipelineConfig batch;
    batch.batch_solve = true;
    auto b_llm = replay();
    const auto bs = analyze(c, c.warnings, b_llm, batch);
    const Verdict& many = find(bs, c.from("configure").id);
    o.require(many.result == VerdictResult::UnknownKeptAsAlarm, "batch_solve configure is " + to_string(many.result));
    bool conversion = false;
    for (const auto& d : many.diagnostics) conversion = conversion || d.find("ConversionUnparseable") != std::string::npos;
    o.require(conversion, "configure did not fail through conversion");
    o.require(infeasible(bs) < infeasible(base), "batch_solve did not lower the filtered count");
    if (o.pass) {
        o.detail = "filtered " + std::to_string(infeasible(base)) + " -> no_context " + std::to_string(infeasible(nc)) +
                   ", batch_solve " + std::to_string(infeasible(bs));
    }
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"fpe-oracle-equivalence", fpe_oracle},
        {"worked-examples", worked_examples},
        {"bound-enforcement", bounds},
        {"early-unsat-economy", early_unsat},
        {"memory-economy", memory_economy},
        {"recall-safety", recall_safety},
        {"metrics-fidelity", metrics_fidelity},
        {"determinism", determinism},
        {"ablation-flags", ablations},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
