// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfa/llm.hpp"
#include "pfa/pipeline.hpp"
#include "pfa/report.hpp"

namespace pfa {

struct ReportInput {
    std::filesystem::path path;
    ReportFormat format = ReportFormat::SARIF;
};

enum class BackendChoice { Http, Replay, Scripted };
std::string to_string(BackendChoice b);

struct BackendConfig {
    BackendChoice kind = BackendChoice::Replay;
    HttpSettings http;
    std::filesystem::path replay_dir;
    std::filesystem::path rules;       // scripted backend
    std::filesystem::path record_dir;  // when set, every exchange is written here
};

struct LimitsConfig {
    int context_depth = 5;
    int repair_rounds = 3;
    int solver_timeout_s = 10;
    int parallelism = 1;
    int max_llm_calls = 200;
    int max_wall_s = 300;
};

struct RunConfig {
    std::filesystem::path project_root;
    std::vector<ReportInput> reports;
    std::filesystem::path warnings;  // ingested warnings (jsonl); optional
    std::filesystem::path run_dir = "runs/latest";
    std::filesystem::path memory;     // persisted memory cache; optional
    BackendConfig backend;
    std::string solver = "builtin";  // "builtin" or a command line such as "z3 -in"
    LimitsConfig limits;
    bool no_context = false;
    bool batch_solve = false;
    std::vector<Boundary> faults;

    /// Deviations from the default bounds, one line each.
    [[nodiscard]] std::vector<std::string> overrides() const;
    [[nodiscard]] PipelineConfig pipeline() const;
    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

/// Relative paths are resolved against the config file's directory. Throws ConfigError.
RunConfig load_run_config(const std::filesystem::path& file);
RunConfig parse_run_config(const std::string& toml_text, const std::filesystem::path& base_dir);

nlohmann::json to_json(const RunConfig& c);

}  // namespace pfa
