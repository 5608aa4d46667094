// SPDX-License-Identifier: Apache-2.0
#include "pfa/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <toml.hpp>

#include "pfa/error.hpp"

namespace pfa {

std::string to_string(BackendChoice b) {
    switch (b) {
        case BackendChoice::Http: return "http";
        case BackendChoice::Replay: return "replay";
        case BackendChoice::Scripted: return "scripted";
    }
    return "?";
}

namespace {

BackendChoice backend_from_string(const std::string& s) {
    if (s == "http") return BackendChoice::Http;
    if (s == "replay") return BackendChoice::Replay;
    if (s == "scripted") return BackendChoice::Scripted;
    throw Error(ErrorCode::ConfigError, "unknown backend '" + s + "' (http, replay, scripted)");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return {};
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <typename T>
void read(const toml::node_view<const toml::node>& node, T& into, const std::string& key) {
    if (!node) return;
    if (auto v = node.value<T>()) {
        into = *v;
        return;
    }
    throw Error(ErrorCode::ConfigError, "wrong type for '" + key + "'");
}

void read_int(const toml::node_view<const toml::node>& node, int& into, const std::string& key) {
    std::int64_t v = into;
    read(node, v, key);
    into = static_cast<int>(v);
}

void reject_unknown_keys(const toml::table& t, std::initializer_list<std::string_view> known, const std::string& where) {
    for (const auto& [k, v] : t) {
        if (std::find(known.begin(), known.end(), k.str()) == known.end()) {
            throw Error(ErrorCode::ConfigError, "unknown key '" + std::string(k.str()) + "'" +
                                                    (where.empty() ? "" : " in [" + where + "]"));
        }
    }
}

}  // namespace

std::vector<std::string> RunConfig::overrides() const {
    std::vector<std::string> out;
    if (limits.context_depth != 5) out.push_back("context_depth overridden: 5 -> " + std::to_string(limits.context_depth));
    if (limits.repair_rounds != 3) out.push_back("repair_rounds overridden: 3 -> " + std::to_string(limits.repair_rounds));
    if (limits.solver_timeout_s != 10) {
        out.push_back("solver_timeout_s overridden: 10 -> " + std::to_string(limits.solver_timeout_s));
    }
    if (no_context) out.push_back("ablation: no_context");
    if (batch_solve) out.push_back("ablation: batch_solve");
    for (const auto b : faults) out.push_back("fault injection at " + to_string(b));
    return out;
}

PipelineConfig RunConfig::pipeline() const {
    PipelineConfig p;
    p.limits.context_depth = limits.context_depth;
    p.limits.no_context = no_context;
    p.repair_rounds = limits.repair_rounds;
    p.batch_solve = batch_solve;
    p.max_llm_calls = static_cast<std::size_t>(limits.max_llm_calls);
    p.max_wall = std::chrono::seconds(limits.max_wall_s);
    p.faults.at.insert(faults.begin(), faults.end());
    return p;
}

void RunConfig::validate() const {
    auto positive = [](int v, const char* name) {
        if (v <= 0) throw Error(ErrorCode::ConfigError, std::string(name) + " must be positive");
    };
    if (limits.context_depth < 0) throw Error(ErrorCode::ConfigError, "context_depth must be non-negative");
    if (limits.repair_rounds < 0 || limits.repair_rounds > 3) {
        throw Error(ErrorCode::ConfigError, "repair_rounds must be between 0 and 3");
    }
    positive(limits.solver_timeout_s, "solver_timeout_s");
    positive(limits.parallelism, "parallelism");
    positive(limits.max_llm_calls, "max_llm_calls");
    positive(limits.max_wall_s, "max_wall_s");
    if (backend.kind == BackendChoice::Replay && backend.replay_dir.empty()) {
        throw Error(ErrorCode::ConfigError, "replay backend needs backend.replay_dir");
    }
    if (backend.kind == BackendChoice::Scripted && backend.rules.empty()) {
        throw Error(ErrorCode::ConfigError, "scripted backend needs backend.rules");
    }
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base) {
    toml::table parsed;
    try {
        parsed = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << e.description() << " at line " << e.source().begin.line;
        throw Error(ErrorCode::ConfigError, msg.str());
    }
    const toml::table& t = parsed;
    reject_unknown_keys(t, {"project_root", "warnings", "run_dir", "memory", "solver", "reports", "backend", "limits",
                            "ablation", "faults"},
                        "");
    auto section = [&](const char* name, std::initializer_list<std::string_view> known) {
        if (const auto* sub = t[name].as_table()) reject_unknown_keys(*sub, known, name);
    };
    section("backend", {"kind", "base_url", "model", "api_key_env", "max_tokens", "timeout_s", "retries",
                        "max_in_flight", "replay_dir", "rules", "record_dir"});
    section("limits", {"context_depth", "repair_rounds", "solver_timeout_s", "parallelism", "max_llm_calls",
                       "max_wall_s"});
    section("ablation", {"no_context", "batch_solve"});
    RunConfig c;
    auto path_field = [&](const toml::node_view<const toml::node>& node, std::filesystem::path& into,
                          const std::string& key) {
        std::string v;
        read(node, v, key);
        if (!v.empty()) into = resolve(base, v);
    };
    path_field(t["project_root"], c.project_root, "project_root");
    path_field(t["warnings"], c.warnings, "warnings");
    path_field(t["run_dir"], c.run_dir, "run_dir");
    path_field(t["memory"], c.memory, "memory");
    read(t["solver"], c.solver, "solver");

    if (auto* reports = t["reports"].as_array()) {
        for (const auto& r : *reports) {
            const auto* rt = r.as_table();
            if (!rt) throw Error(ErrorCode::ConfigError, "reports entries must be tables");
            reject_unknown_keys(*rt, {"path", "format"}, "reports");
            ReportInput in;
            const auto path = (*rt)["path"].value<std::string>();
            if (!path) throw Error(ErrorCode::ConfigError, "report entry without path");
            in.path = resolve(base, *path);
            try {
                const auto format = (*rt)["format"].value<std::string>();
                in.format = format ? report_format_from_string(*format) : detect_report_format(in.path);
            } catch (const Error& e) {
                throw Error(ErrorCode::ConfigError, e.what());
            }
            c.reports.push_back(in);
        }
    }

    const auto b = t["backend"];
    std::string kind = to_string(c.backend.kind);
    read(b["kind"], kind, "backend.kind");
    c.backend.kind = backend_from_string(kind);
    read(b["base_url"], c.backend.http.base_url, "backend.base_url");
    read(b["model"], c.backend.http.model, "backend.model");
    read(b["api_key_env"], c.backend.http.api_key_env, "backend.api_key_env");
    read_int(b["max_tokens"], c.backend.http.max_tokens, "backend.max_tokens");
    int timeout = static_cast<int>(c.backend.http.timeout.count());
    read_int(b["timeout_s"], timeout, "backend.timeout_s");
    c.backend.http.timeout = std::chrono::seconds(timeout);
    read_int(b["retries"], c.backend.http.retry.max_attempts, "backend.retries");
    read_int(b["max_in_flight"], c.backend.http.max_in_flight, "backend.max_in_flight");
    path_field(b["replay_dir"], c.backend.replay_dir, "backend.replay_dir");
    path_field(b["rules"], c.backend.rules, "backend.rules");
    path_field(b["record_dir"], c.backend.record_dir, "backend.record_dir");

    const auto l = t["limits"];
    read_int(l["context_depth"], c.limits.context_depth, "limits.context_depth");
    read_int(l["repair_rounds"], c.limits.repair_rounds, "limits.repair_rounds");
    read_int(l["solver_timeout_s"], c.limits.solver_timeout_s, "limits.solver_timeout_s");
    read_int(l["parallelism"], c.limits.parallelism, "limits.parallelism");
    read_int(l["max_llm_calls"], c.limits.max_llm_calls, "limits.max_llm_calls");
    read_int(l["max_wall_s"], c.limits.max_wall_s, "limits.max_wall_s");

    const auto a = t["ablation"];
    read(a["no_context"], c.no_context, "ablation.no_context");
    read(a["batch_solve"], c.batch_solve, "ablation.batch_solve");

    if (auto* faults = t["faults"].as_array()) {
        for (const auto& f : *faults) {
            const auto name = f.value<std::string>();
            if (!name) throw Error(ErrorCode::ConfigError, "faults entries must be strings");
            c.faults.push_back(boundary_from_string(*name));
        }
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), std::filesystem::absolute(file).parent_path());
}

nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json reports = nlohmann::json::array();
    for (const auto& r : c.reports) {
        reports.push_back({{"path", r.path.string()},
                           {"format", r.format == ReportFormat::SARIF       ? "sarif"
                                      : r.format == ReportFormat::InferJSON ? "infer"
                                                                            : "cppcheck"}});
    }
    nlohmann::json faults = nlohmann::json::array();
    for (const auto f : c.faults) faults.push_back(to_string(f));
    return {{"project_root", c.project_root.string()},
            {"reports", reports},
            {"backend",
             {{"kind", to_string(c.backend.kind)},
              {"model", c.backend.http.model},
              {"base_url", c.backend.http.base_url},
              {"temperature", 0}}},
            {"solver", c.solver},
            {"limits",
             {{"context_depth", c.limits.context_depth},
              {"repair_rounds", c.limits.repair_rounds},
              {"solver_timeout_s", c.limits.solver_timeout_s},
              {"max_llm_calls", c.limits.max_llm_calls},
              {"max_wall_s", c.limits.max_wall_s}}},
            {"ablation", {{"no_context", c.no_context}, {"batch_solve", c.batch_solve}}},
            {"faults", faults}};
}

}  // namespace pfa
