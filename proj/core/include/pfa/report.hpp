// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfa/code_model.hpp"
#include "pfa/error.hpp"
#include "pfa/program.hpp"

namespace pfa {

enum class BugType { NPD, UAF, BOF };
enum class Analyzer { CodeQL, Infer, CppCheck, Other };
enum class Label { TruePositive, FalsePositive };
enum class ReportFormat { SARIF, InferJSON, CppCheckXML };

std::string to_string(BugType t);
std::string to_string(Analyzer a);
std::string to_string(Label l);
BugType bug_type_from_string(const std::string& s);
Analyzer analyzer_from_string(const std::string& s);
Label label_from_string(const std::string& s);
ReportFormat report_format_from_string(const std::string& s);
/// Format from the file name (.sarif, .xml) or, for .json, from the top-level shape.
/// Throws MalformedReport when neither decides.
ReportFormat detect_report_format(const std::filesystem::path& path);

/// Maps an analyzer rule identifier to a bug type; nullopt when unmapped.
std::optional<BugType> bug_type_for_rule(const std::string& rule_id);

struct SourceSinkPair {
    std::string target_var;
    ProgramPoint source;
    ProgramPoint sink;
    std::vector<std::string> aliases;  // direct assignment chain recorded at ingest

    friend bool operator==(const SourceSinkPair&, const SourceSinkPair&) = default;
};

/// How two adjacent trace functions are linked.
struct CallEdge {
    ProgramPoint site;      // the call expression's location
    bool downward = true;   // true: trace[i] calls trace[i+1]; false: trace[i+1] calls trace[i]

    friend bool operator==(const CallEdge&, const CallEdge&) = default;
};

struct Warning {
    std::string id;
    BugType bug_type = BugType::NPD;
    std::string rule;
    SourceSinkPair pair;
    std::vector<FunctionRef> trace;   // source function first, sink function last
    std::vector<CallEdge> call_edges;  // trace.size() - 1 entries
    Analyzer analyzer = Analyzer::Other;
    std::optional<Label> label;

    friend bool operator==(const Warning&, const Warning&) = default;
};

struct IngestDiagnostic {
    ErrorCode code;
    std::string message;
};

struct IngestResult {
    std::vector<Warning> warnings;
    std::vector<IngestDiagnostic> diagnostics;
};

/// Stable id: hash of analyzer, rule, sink file, sink line, and target variable.
std::string warning_id(Analyzer analyzer, const std::string& rule, const ProgramPoint& sink,
                       const std::string& target_var);

/// Parses an analyzer report. Results that cannot be mapped or resolved are
/// reported in `diagnostics` and excluded. Throws MalformedReport on syntax errors.
IngestResult parse_report(const std::filesystem::path& path, ReportFormat format, const CodeIndex& index);
IngestResult parse_report_text(const std::string& text, ReportFormat format, const CodeIndex& index);

struct ResolvedTrace {
    std::vector<FunctionRef> functions;
    std::vector<CallEdge> edges;
};

/// Maps ordered locations to their enclosing functions and links adjacent
/// functions by a call site. Throws UnresolvedTrace.
ResolvedTrace resolve_trace(const std::vector<ProgramPoint>& raw_locations, const CodeIndex& index);

nlohmann::json to_json(const Warning& w);
Warning warning_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProgramPoint& p);
ProgramPoint program_point_from_json(const nlohmann::json& j);

void write_warnings_jsonl(const std::filesystem::path& path, const std::vector<Warning>& warnings);
std::vector<Warning> read_warnings_jsonl(const std::filesystem::path& path);

}  // namespace pfa
