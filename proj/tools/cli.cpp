// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <memory>

#include <nlohmann/json.hpp>

#include "pfa/code_model.hpp"
#include "pfa/config.hpp"
#include "pfa/error.hpp"
#include "pfa/eval.hpp"
#include "pfa/expert.hpp"
#include "pfa/pipeline.hpp"
#include "pfa/report.hpp"

namespace pfa::cli {

namespace {

struct AnalyzeFlags {
    std::string config;
    std::string replay;
    std::string backend;
    std::string rules;
    std::string record_dir;
    std::string run_dir;
    std::string warnings;
    std::string solver;
    std::string memory;
    int parallelism = 0;
    int context_depth = -1;
    int repair_rounds = -1;
    bool no_context = false;
    bool batch_solve = false;
    std::vector<std::string> faults;
};

void error_line(std::ostream& err, const std::string& code, const std::string& message) {
    err << nlohmann::json{{"error", code}, {"message", message}}.dump() << "\n";
}

int fail(std::ostream& err, const Error& e) {
    error_line(err, std::string(to_string(e.code())), e.what());
    return e.code() == ErrorCode::ConfigError ? Config : Runtime;
}

std::shared_ptr<LlmBackend> make_backend(const RunConfig& c) {
    std::shared_ptr<LlmBackend> b;
    switch (c.backend.kind) {
        case BackendChoice::Http: b = std::make_shared<HttpBackend>(c.backend.http); break;
        case BackendChoice::Replay: b = std::make_shared<ReplayBackend>(c.backend.replay_dir); break;
        case BackendChoice::Scripted:
            b = std::make_shared<ScriptedBackend>(expert_responder(load_expert_rules(c.backend.rules)), "scripted-expert");
            break;
    }
    if (!c.backend.record_dir.empty()) b = std::make_shared<RecordingBackend>(b, c.backend.record_dir);
    return b;
}

std::vector<Warning> load_warnings(const RunConfig& c, const CodeIndex& index, std::ostream& err) {
    if (!c.warnings.empty()) return read_warnings_jsonl(c.warnings);
    std::vector<Warning> all;
    for (const auto& r : c.reports) {
        auto res = parse_report(r.path, r.format, index);
        for (const auto& d : res.diagnostics) error_line(err, std::string(to_string(d.code)), d.message);
        all.insert(all.end(), res.warnings.begin(), res.warnings.end());
    }
    return all;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + p.string());
    out << text;
}

int cmd_index(const std::string& root, const std::string& cache, std::ostream& out) {
    IndexOptions opts;
    if (!cache.empty()) opts.cache_path = cache;
    const CodeIndex index = build_index(root, opts);
    nlohmann::json functions = nlohmann::json::array();
    for (const auto& [name, defs] : index.functions()) {
        for (const auto& d : defs) functions.push_back({{"name", d.name}, {"file", d.file}, {"line", d.begin_line}});
    }
    out << nlohmann::json{{"root", root}, {"functions", index.function_count()}, {"macros", index.macros().size()},
                          {"definitions", functions}}
               .dump(2)
        << "\n";
    return Ok;
}

int cmd_ingest(const std::vector<std::string>& reports, const std::string& root, const std::string& format,
               const std::string& out_path, std::ostream& out, std::ostream& err) {
    const CodeIndex index = build_index(root);
    std::vector<Warning> all;
    for (const auto& r : reports) {
        ReportFormat f;
        try {
            f = format.empty() ? detect_report_format(r) : report_format_from_string(format);
        } catch (const Error& e) {
            throw Error(ErrorCode::ConfigError, e.what());
        }
        auto res = parse_report(r, f, index);
        for (const auto& d : res.diagnostics) error_line(err, std::string(to_string(d.code)), d.message);
        all.insert(all.end(), res.warnings.begin(), res.warnings.end());
    }
    if (out_path.empty()) {
        for (const auto& w : all) out << to_json(w).dump() << "\n";
    } else {
        write_warnings_jsonl(out_path, all);
        out << all.size() << " warnings written to " << out_path << "\n";
    }
    return Ok;
}

int cmd_analyze(const AnalyzeFlags& f, std::ostream& out, std::ostream& err) {
    RunConfig c = load_run_config(f.config);
    if (!f.replay.empty()) {
        c.backend.kind = BackendChoice::Replay;
        c.backend.replay_dir = f.replay;
    }
    if (!f.backend.empty()) {
        if (f.backend == "replay") c.backend.kind = BackendChoice::Replay;
        else if (f.backend == "scripted") c.backend.kind = BackendChoice::Scripted;
        else if (f.backend == "http") c.backend.kind = BackendChoice::Http;
        else throw Error(ErrorCode::ConfigError, "unknown backend '" + f.backend + "'");
    }
    if (!f.rules.empty()) c.backend.rules = f.rules;
    if (!f.record_dir.empty()) c.backend.record_dir = f.record_dir;
    if (!f.run_dir.empty()) c.run_dir = f.run_dir;
    if (!f.warnings.empty()) c.warnings = f.warnings;
    if (!f.solver.empty()) c.solver = f.solver;
    if (!f.memory.empty()) c.memory = f.memory;
    if (f.parallelism > 0) c.limits.parallelism = f.parallelism;
    if (f.context_depth >= 0) c.limits.context_depth = f.context_depth;
    if (f.repair_rounds >= 0) c.limits.repair_rounds = f.repair_rounds;
    if (f.no_context) c.no_context = true;
    if (f.batch_solve) c.batch_solve = true;
    for (const auto& b : f.faults) c.faults.push_back(boundary_from_string(b));
    c.validate();
    for (const auto& o : c.overrides()) err << "note: " << o << "\n";

    const CodeIndex index = build_index(c.project_root);
    const auto warnings = load_warnings(c, index, err);
    auto llm = make_backend(c);
    MemoryStore memory;
    if (!c.memory.empty() && std::filesystem::exists(c.memory)) memory.load(c.memory);
    CachingCfgProvider cfgs;
    PipelineServices services{&index, &cfgs, llm.get(), &memory,
                              make_solver_factory(c.solver, std::chrono::seconds(c.limits.solver_timeout_s))};
    const auto results =
        analyze_batch(warnings, services, c.pipeline(), static_cast<std::size_t>(c.limits.parallelism));

    write_run_dir(c.run_dir, results);
    memory.save(c.run_dir / "memory.json");
    if (!c.memory.empty()) memory.save(c.memory);
    nlohmann::json rc = to_json(c);
    rc["parallelism"] = c.limits.parallelism;
    rc["overrides"] = c.overrides();
    write_file(c.run_dir / "run-config.json", rc.dump(2) + "\n");

    std::map<VerdictResult, int> counts;
    for (const auto& r : results) ++counts[r.verdict.result];
    out << results.size() << " warnings: " << counts[VerdictResult::Feasible] << " Feasible, "
        << counts[VerdictResult::Infeasible] << " Infeasible, " << counts[VerdictResult::UnknownKeptAsAlarm]
        << " Unknown-KeptAsAlarm; run directory " << c.run_dir.string() << "\n";
    return Ok;
}

int cmd_eval(const std::string& verdicts, const std::string& labels, const std::string& by, const std::string& format,
             const std::string& technique, std::ostream& out) {
    const auto vs = read_verdicts_jsonl(verdicts);
    const auto ls = load_labels(labels);
    const GroupBy g = by == "analyzer" ? GroupBy::Analyzer : GroupBy::BugType;
    const auto rows = breakdown(vs, ls, g, technique);
    out << (format == "csv" ? render_csv(rows, g) : render_markdown(rows, g));
    return Ok;
}

std::filesystem::path memory_path(const std::string& memory, const std::string& config) {
    if (!memory.empty()) return memory;
    if (config.empty()) throw Error(ErrorCode::ConfigError, "cache needs --memory or --config");
    const RunConfig c = load_run_config(config);
    return c.memory.empty() ? c.run_dir / "memory.json" : c.memory;
}

int cmd_cache(bool clear, const std::string& memory, const std::string& config, std::ostream& out) {
    const auto path = memory_path(memory, config);
    MemoryStore store;
    if (std::filesystem::exists(path)) store.load(path);
    if (clear) {
        const auto n = store.size();
        store.clear();
        store.save(path);
        out << "cleared " << n << " entries from " << path.string() << "\n";
        return Ok;
    }
    for (const auto& e : store.entries()) {
        out << e.key << "  " << e.callee << "  [" << e.canonical_p << "]  " << e.value.describe() << "\n";
    }
    out << store.size() << " entries\n";
    return Ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Path-feasibility triage of static analyzer warnings", "pfa"};
    app.require_subcommand(1);

    std::string root;
    std::string index_cache;
    auto* index = app.add_subcommand("index", "Index the C functions under a project root");
    index->add_option("root", root, "Project root")->required();
    index->add_option("--cache", index_cache, "Per-file index cache (JSON)");

    std::vector<std::string> reports;
    std::string ingest_root;
    std::string ingest_format;
    std::string ingest_out;
    auto* ingest = app.add_subcommand("ingest", "Normalize analyzer reports into warnings");
    ingest->add_option("reports", reports, "Report files")->required();
    ingest->add_option("--root", ingest_root, "Project root")->required();
    ingest->add_option("--format", ingest_format, "sarif, infer, or cppcheck (default: detected per file)");
    ingest->add_option("--out", ingest_out, "Output warnings file (jsonl)");

    AnalyzeFlags af;
    auto* analyze = app.add_subcommand("analyze", "Decide path feasibility for each warning");
    analyze->add_option("--config", af.config, "Run configuration (TOML)")->required();
    analyze->add_option("--replay", af.replay, "Replay recorded LLM exchanges from this directory");
    analyze->add_option("--backend", af.backend, "http, replay, or scripted");
    analyze->add_option("--rules", af.rules, "Rules file for the scripted backend");
    analyze->add_option("--record-dir", af.record_dir, "Record every LLM exchange here");
    analyze->add_option("--run-dir", af.run_dir, "Run directory");
    analyze->add_option("--warnings", af.warnings, "Ingested warnings (jsonl)");
    analyze->add_option("--solver", af.solver, "builtin or a solver command line");
    analyze->add_option("--memory", af.memory, "Persistent memory cache");
    analyze->add_option("--parallelism", af.parallelism, "Worker threads");
    analyze->add_option("--context-depth", af.context_depth, "Agent context depth");
    analyze->add_option("--repair-rounds", af.repair_rounds, "Script repair rounds (at most 3)");
    analyze->add_flag("--no-context", af.no_context, "Disable context retrieval for call ranges");
    analyze->add_flag("--batch-solve", af.batch_solve, "Convert and solve each segment as one script");
    analyze->add_option("--fault", af.faults, "Inject a failure at a module boundary");

    std::string verdicts;
    std::string labels;
    std::string by = "type";
    std::string format = "md";
    std::string technique = "pfa";
    auto* eval = app.add_subcommand("eval", "Score verdicts against labels");
    eval->add_option("--verdicts", verdicts, "verdicts.jsonl")->required();
    eval->add_option("--labels", labels, "Labels (JSON)")->required();
    eval->add_option("--by", by, "type or analyzer")->check(CLI::IsMember({"type", "analyzer"}));
    eval->add_option("--format", format, "md or csv")->check(CLI::IsMember({"md", "csv"}));
    eval->add_option("--technique", technique, "Row label");

    std::string memory;
    std::string cache_config;
    auto* cache = app.add_subcommand("cache", "Inspect or clear the memory cache");
    cache->require_subcommand(1);
    auto* show = cache->add_subcommand("show", "List cached call ranges");
    auto* clear = cache->add_subcommand("clear", "Remove every cached entry");
    for (auto* s : {show, clear}) {
        s->add_option("--memory", memory, "Memory cache file");
        s->add_option("--config", cache_config, "Run configuration (TOML)");
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return Ok;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return Ok;
        }
        error_line(err, "Usage", e.what());
        return Usage;
    }

    try {
        if (*index) return cmd_index(root, index_cache, out);
        if (*ingest) return cmd_ingest(reports, ingest_root, ingest_format, ingest_out, out, err);
        if (*analyze) return cmd_analyze(af, out, err);
        if (*eval) return cmd_eval(verdicts, labels, by, format, technique, out);
        if (*cache) return cmd_cache(bool(*clear), memory, cache_config, out);
    } catch (const Error& e) {
        return fail(err, e);
    } catch (const std::exception& e) {
        error_line(err, "Internal", e.what());
        return Runtime;
    }
    return Usage;
}

}  // namespace pfa::cli
