// SPDX-License-Identifier: Apache-2.0
#include "pfa/report.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "pfa/cexpr.hpp"
#include "pfa/hash.hpp"
#include "pfa/lexer.hpp"

namespace pfa {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(BugType t) {
    switch (t) {
        case BugType::NPD: return "NPD";
        case BugType::UAF: return "UAF";
        case BugType::BOF: return "BOF";
    }
    return "?";
}

std::string to_string(Analyzer a) {
    switch (a) {
        case Analyzer::CodeQL: return "CodeQL";
        case Analyzer::Infer: return "Infer";
        case Analyzer::CppCheck: return "CppCheck";
        case Analyzer::Other: return "Other";
    }
    return "?";
}

std::string to_string(Label l) { return l == Label::TruePositive ? "TruePositive" : "FalsePositive"; }

BugType bug_type_from_string(const std::string& s) {
    if (s == "NPD") return BugType::NPD;
    if (s == "UAF") return BugType::UAF;
    if (s == "BOF") return BugType::BOF;
    throw Error(ErrorCode::MalformedReport, "unknown bug type '" + s + "'");
}

Analyzer analyzer_from_string(const std::string& s) {
    if (s == "CodeQL") return Analyzer::CodeQL;
    if (s == "Infer") return Analyzer::Infer;
    if (s == "CppCheck") return Analyzer::CppCheck;
    return Analyzer::Other;
}

Label label_from_string(const std::string& s) {
    if (s == "TruePositive" || s == "TP" || s == "true") return Label::TruePositive;
    if (s == "FalsePositive" || s == "FP" || s == "false") return Label::FalsePositive;
    throw Error(ErrorCode::MalformedReport, "unknown label '" + s + "'");
}

ReportFormat report_format_from_string(const std::string& s) {
    std::string k;
    for (char c : s) k.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (k == "sarif") return ReportFormat::SARIF;
    if (k == "infer" || k == "inferjson") return ReportFormat::InferJSON;
    if (k == "cppcheck" || k == "cppcheckxml") return ReportFormat::CppCheckXML;
    throw Error(ErrorCode::ConfigError, "unknown report format '" + s + "'");
}

ReportFormat detect_report_format(const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".sarif") return ReportFormat::SARIF;
    if (ext == ".xml") return ReportFormat::CppCheckXML;
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MalformedReport, "cannot read " + path.string());
    char first = 0;
    while (in.get(first) && std::isspace(static_cast<unsigned char>(first))) {
    }
    if (first == '<') return ReportFormat::CppCheckXML;
    if (first == '[') return ReportFormat::InferJSON;
    if (first == '{') return ReportFormat::SARIF;
    throw Error(ErrorCode::MalformedReport, "cannot tell the format of " + path.string() + "; name it explicitly");
}

std::optional<BugType> bug_type_for_rule(const std::string& rule_id) {
    std::string id = rule_id;
    for (std::string_view prefix : {"cpp/", "c/"}) {
        if (id.starts_with(prefix)) id = id.substr(prefix.size());
    }
    std::string key;
    for (char c : id) {
        if (std::isalnum(static_cast<unsigned char>(c))) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (key.ends_with("ql")) key.resize(key.size() - 2);
    static const std::map<std::string, BugType> kRules = {
        {"missingnulltest", BugType::NPD},  {"nullpointer", BugType::NPD},
        {"nulldereference", BugType::NPD},  {"nullptrdereference", BugType::NPD},
        {"useafterfree", BugType::UAF},     {"overflowbuffer", BugType::BOF},
    };
    auto it = kRules.find(key);
    if (it == kRules.end()) return std::nullopt;
    return it->second;
}

std::string warning_id(Analyzer analyzer, const std::string& rule, const ProgramPoint& sink,
                       const std::string& target_var) {
    return short_hash(to_string(analyzer) + "\x1f" + rule + "\x1f" + sink.file + "\x1f" + std::to_string(sink.line) +
                      "\x1f" + target_var);
}

// ---------------------------------------------------------------------------
// Trace resolution

ResolvedTrace resolve_trace(const std::vector<ProgramPoint>& raw, const CodeIndex& index) {
    if (raw.empty()) throw Error(ErrorCode::UnresolvedTrace, "empty location list");
    std::vector<const FunctionDef*> defs;
    std::vector<std::vector<int>> lines_in;
    for (const auto& p : raw) {
        if (index.line_count(p.file) == 0) {
            throw Error(ErrorCode::UnresolvedTrace, "file not in project: " + p.file);
        }
        if (p.line < 1 || p.line > index.line_count(p.file)) {
            throw Error(ErrorCode::UnresolvedTrace, p.file + ":" + std::to_string(p.line) + " is out of range");
        }
        const FunctionDef* d = index.enclosing(p.file, p.line);
        if (d == nullptr) {
            throw Error(ErrorCode::UnresolvedTrace,
                        p.file + ":" + std::to_string(p.line) + " is not inside an indexed function");
        }
        if (!defs.empty() && defs.back() == d) {
            lines_in.back().push_back(p.line);
            continue;
        }
        defs.push_back(d);
        lines_in.push_back({p.line});
    }
    ResolvedTrace out;
    for (const auto* d : defs) out.functions.push_back(d->ref());
    for (std::size_t i = 0; i + 1 < defs.size(); ++i) {
        auto pick = [&](const FunctionDef& caller, const std::string& callee,
                        const std::vector<int>& hints) -> std::optional<int> {
            const auto lines = call_lines(caller, callee);
            if (lines.empty()) return std::nullopt;
            for (int h : hints) {
                if (std::find(lines.begin(), lines.end(), h) != lines.end()) return h;
            }
            return lines.front();
        };
        CallEdge edge;
        if (auto line = pick(*defs[i], defs[i + 1]->name, lines_in[i])) {
            edge.site = ProgramPoint{defs[i]->file, *line, std::nullopt, index.line_text(defs[i]->file, *line)};
            edge.downward = true;
        } else if (auto up = pick(*defs[i + 1], defs[i]->name, lines_in[i + 1])) {
            edge.site = ProgramPoint{defs[i + 1]->file, *up, std::nullopt, index.line_text(defs[i + 1]->file, *up)};
            edge.downward = false;
        } else {
            throw Error(ErrorCode::UnresolvedTrace,
                        "no call links " + defs[i]->name + " and " + defs[i + 1]->name);
        }
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        edge.site.expr_text = trim(edge.site.expr_text);
        out.edges.push_back(std::move(edge));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report formats

namespace {

struct RawResult {
    std::string rule;
    Analyzer analyzer = Analyzer::Other;
    std::string target_var;          // may be empty; inferred later
    std::vector<ProgramPoint> locations;  // source first, sink last
    std::optional<Label> label;
};

std::string trim(std::string s) {
    s.erase(0, s.find_first_not_of(" \t"));
    const auto last = s.find_last_not_of(" \t\r");
    s.erase(last == std::string::npos ? 0 : last + 1);
    return s;
}

std::string relativize(const std::string& uri, const CodeIndex& index) {
    std::string path = uri;
    if (path.starts_with("file://")) path = path.substr(7);
    fs::path p(path);
    if (p.is_absolute()) {
        std::error_code ec;
        const auto root = fs::weakly_canonical(index.root(), ec);
        const auto rel = fs::relative(fs::weakly_canonical(p, ec), root, ec);
        if (!ec && !rel.empty() && *rel.begin() != "..") return rel.generic_string();
    }
    return p.lexically_normal().generic_string();
}

std::vector<std::string> identifiers(const std::string& text) {
    std::vector<std::string> out;
    for (const auto& t : lex_c(text)) {
        if (t.is_ident() && !is_c_keyword(t.text)) out.push_back(t.text);
    }
    return out;
}

bool dereferences(const std::string& text, const std::string& var) {
    const auto toks = lex_c(text);
    for (std::size_t k = 0; k < toks.size(); ++k) {
        if (!toks[k].is_ident() || toks[k].text != var) continue;
        if (k + 1 < toks.size() && (toks[k + 1].is("->") || toks[k + 1].is("["))) return true;
        if (k > 0 && toks[k - 1].is("*")) return true;
    }
    return false;
}

bool mentions(const std::string& text, const std::string& var) {
    const auto ids = identifiers(text);
    return std::find(ids.begin(), ids.end(), var) != ids.end();
}

std::string infer_target(const ProgramPoint& source, const ProgramPoint& sink) {
    const auto sink_ids = identifiers(sink.expr_text);
    const auto src_ids = identifiers(source.expr_text);
    for (const auto& id : sink_ids) {
        if (dereferences(sink.expr_text, id) &&
            (std::find(src_ids.begin(), src_ids.end(), id) != src_ids.end() || source == sink)) {
            return id;
        }
    }
    for (const auto& id : sink_ids) {
        if (std::find(src_ids.begin(), src_ids.end(), id) != src_ids.end()) return id;
    }
    return {};
}

// Direct assignment chain `alias = target;` recorded among the trace locations.
std::vector<std::string> aliases_for(const std::string& target, const std::vector<ProgramPoint>& locs) {
    std::vector<std::string> aliases;
    std::vector<std::string> known{target};
    for (const auto& p : locs) {
        const auto toks = lex_c(p.expr_text);
        for (std::size_t k = 0; k + 3 < toks.size() + 1 && k + 2 < toks.size(); ++k) {
            if (toks[k].is_ident() && toks[k + 1].is("=") && toks[k + 2].is_ident() &&
                (k + 3 >= toks.size() || toks[k + 3].is(";")) &&
                std::find(known.begin(), known.end(), toks[k + 2].text) != known.end() &&
                std::find(known.begin(), known.end(), toks[k].text) == known.end()) {
                known.push_back(toks[k].text);
                aliases.push_back(toks[k].text);
            }
        }
    }
    return aliases;
}

ProgramPoint point(const std::string& file, int line, std::optional<int> col, const CodeIndex& index,
                   const std::string& snippet = {}) {
    std::string text = index.line_text(file, line);
    if (text.empty()) text = snippet;
    return ProgramPoint{file, line, col, trim(text)};
}

std::vector<RawResult> read_sarif(const std::string& text, const CodeIndex& index) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedReport, std::string("SARIF: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("runs") || !doc["runs"].is_array()) {
        throw Error(ErrorCode::MalformedReport, "SARIF: missing runs array");
    }
    std::vector<RawResult> out;
    try {
        for (const auto& run : doc["runs"]) {
            std::string tool = run.value("/tool/driver/name"_json_pointer, std::string());
            Analyzer analyzer = Analyzer::Other;
            std::string lower;
            for (char c : tool) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            if (lower.find("codeql") != std::string::npos) analyzer = Analyzer::CodeQL;
            else if (lower.find("infer") != std::string::npos) analyzer = Analyzer::Infer;
            else if (lower.find("cppcheck") != std::string::npos) analyzer = Analyzer::CppCheck;
            std::map<std::string, std::string> rule_names;
            if (run.contains("/tool/driver/rules"_json_pointer)) {
                for (const auto& r : run["tool"]["driver"]["rules"]) {
                    if (r.contains("id") && r.contains("name")) rule_names[r["id"]] = r["name"];
                }
            }
            if (!run.contains("results")) continue;
            for (const auto& res : run.at("results")) {
                RawResult rr;
                rr.analyzer = analyzer;
                rr.rule = res.value("ruleId", std::string());
                if (rr.rule.empty() && res.contains("rule")) rr.rule = res["rule"].value("id", std::string());
                if (!bug_type_for_rule(rr.rule) && rule_names.contains(rr.rule)) rr.rule = rule_names[rr.rule];
                if (res.contains("properties")) {
                    const auto& props = res["properties"];
                    rr.target_var = props.value("targetVariable", std::string());
                    if (props.contains("label")) rr.label = label_from_string(props["label"].get<std::string>());
                }
                auto phys = [&](const json& loc) {
                    const auto& pl = loc.at("physicalLocation");
                    const std::string file = relativize(pl.at("artifactLocation").at("uri").get<std::string>(), index);
                    const auto& region = pl.at("region");
                    std::optional<int> col;
                    if (region.contains("startColumn")) col = region["startColumn"].get<int>();
                    std::string snippet;
                    if (region.contains("snippet")) snippet = region["snippet"].value("text", std::string());
                    return point(file, region.at("startLine").get<int>(), col, index, snippet);
                };
                if (res.contains("codeFlows") && !res["codeFlows"].empty()) {
                    const auto& flow = res["codeFlows"][0]["threadFlows"][0]["locations"];
                    for (const auto& l : flow) rr.locations.push_back(phys(l.at("location")));
                }
                if (rr.locations.empty() && res.contains("locations") && !res["locations"].empty()) {
                    rr.locations.push_back(phys(res["locations"][0]));
                }
                if (rr.locations.empty()) throw Error(ErrorCode::MalformedReport, "SARIF result without locations");
                out.push_back(std::move(rr));
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedReport, std::string("SARIF: ") + e.what());
    }
    return out;
}

std::vector<RawResult> read_infer(const std::string& text, const CodeIndex& index) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedReport, std::string("Infer: ") + e.what());
    }
    if (!doc.is_array()) throw Error(ErrorCode::MalformedReport, "Infer: report.json must be an array");
    std::vector<RawResult> out;
    static const std::regex kBacktick("`([A-Za-z_][A-Za-z0-9_]*)`");
    try {
        for (const auto& issue : doc) {
            RawResult rr;
            rr.analyzer = Analyzer::Infer;
            rr.rule = issue.at("bug_type").get<std::string>();
            const std::string qualifier = issue.value("qualifier", std::string());
            std::smatch m;
            if (std::regex_search(qualifier, m, kBacktick)) rr.target_var = m[1];
            const std::string file = relativize(issue.at("file").get<std::string>(), index);
            if (issue.contains("bug_trace")) {
                for (const auto& step : issue["bug_trace"]) {
                    std::optional<int> col;
                    if (step.contains("column_number") && step["column_number"].get<int>() > 0) {
                        col = step["column_number"].get<int>();
                    }
                    rr.locations.push_back(point(relativize(step.at("filename").get<std::string>(), index),
                                                 step.at("line_number").get<int>(), col, index));
                }
            }
            std::optional<int> col;
            if (issue.contains("column") && issue["column"].get<int>() > 0) col = issue["column"].get<int>();
            ProgramPoint sink = point(file, issue.at("line").get<int>(), col, index);
            if (rr.locations.empty() || !(rr.locations.back().file == sink.file && rr.locations.back().line == sink.line)) {
                rr.locations.push_back(sink);
            }
            out.push_back(std::move(rr));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedReport, std::string("Infer: ") + e.what());
    }
    return out;
}

std::vector<RawResult> read_cppcheck(const std::string& text, const CodeIndex& index) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_xml(in, tree);
    } catch (const pt::xml_parser_error& e) {
        throw Error(ErrorCode::MalformedReport, std::string("CppCheck XML: ") + e.what());
    }
    const auto results = tree.get_child_optional("results");
    if (!results || results->get<std::string>("<xmlattr>.version", "") != "2") {
        throw Error(ErrorCode::MalformedReport, "CppCheck XML: expected <results version=\"2\">");
    }
    std::vector<RawResult> out;
    const auto errors = results->get_child_optional("errors");
    if (!errors) return out;
    for (const auto& [tag, err] : *errors) {
        if (tag != "error") continue;
        RawResult rr;
        rr.analyzer = Analyzer::CppCheck;
        rr.rule = err.get<std::string>("<xmlattr>.id", "");
        rr.target_var = err.get<std::string>("symbol", "");
        std::vector<ProgramPoint> locs;
        for (const auto& [ltag, loc] : err) {
            if (ltag != "location") continue;
            const std::string file = relativize(loc.get<std::string>("<xmlattr>.file", ""), index);
            std::optional<int> col;
            if (auto c = loc.get_optional<int>("<xmlattr>.column")) col = *c;
            locs.push_back(point(file, loc.get<int>("<xmlattr>.line", 0), col, index));
        }
        // Primary (sink) location comes first in CppCheck output.
        std::reverse(locs.begin(), locs.end());
        rr.locations = std::move(locs);
        if (rr.locations.empty()) continue;
        out.push_back(std::move(rr));
    }
    return out;
}

}  // namespace

IngestResult parse_report_text(const std::string& text, ReportFormat format, const CodeIndex& index) {
    std::vector<RawResult> raw;
    switch (format) {
        case ReportFormat::SARIF: raw = read_sarif(text, index); break;
        case ReportFormat::InferJSON: raw = read_infer(text, index); break;
        case ReportFormat::CppCheckXML: raw = read_cppcheck(text, index); break;
    }
    IngestResult result;
    for (auto& rr : raw) {
        const auto bt = bug_type_for_rule(rr.rule);
        if (!bt) {
            result.diagnostics.push_back({ErrorCode::UnknownRuleId, "rule '" + rr.rule + "' is not mapped to a bug type"});
            continue;
        }
        try {
            const ResolvedTrace trace = resolve_trace(rr.locations, index);
            Warning w;
            w.bug_type = *bt;
            w.rule = rr.rule;
            w.analyzer = rr.analyzer;
            w.label = rr.label;
            w.pair.source = rr.locations.front();
            w.pair.sink = rr.locations.back();
            w.pair.target_var = rr.target_var.empty() ? infer_target(w.pair.source, w.pair.sink) : rr.target_var;
            if (w.pair.target_var.empty()) {
                throw Error(ErrorCode::UnresolvedTrace, "cannot determine the target variable at " + w.pair.sink.file +
                                                            ":" + std::to_string(w.pair.sink.line));
            }
            w.pair.aliases = aliases_for(w.pair.target_var, rr.locations);
            auto names_target = [&](const ProgramPoint& p) {
                if (mentions(p.expr_text, w.pair.target_var)) return true;
                return std::any_of(w.pair.aliases.begin(), w.pair.aliases.end(),
                                   [&](const std::string& a) { return mentions(p.expr_text, a); });
            };
            if (!names_target(w.pair.source) || !names_target(w.pair.sink)) {
                throw Error(ErrorCode::UnresolvedTrace, "target '" + w.pair.target_var +
                                                            "' does not occur at both source and sink");
            }
            w.trace = trace.functions;
            w.call_edges = trace.edges;
            w.id = warning_id(w.analyzer, w.rule, w.pair.sink, w.pair.target_var);
            result.warnings.push_back(std::move(w));
        } catch (const Error& e) {
            result.diagnostics.push_back({e.code(), e.what()});
        }
    }
    return result;
}

IngestResult parse_report(const fs::path& path, ReportFormat format, const CodeIndex& index) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MalformedReport, "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_report_text(ss.str(), format, index);
}

// ---------------------------------------------------------------------------
// JSON

json to_json(const ProgramPoint& p) {
    json j{{"file", p.file}, {"line", p.line}, {"expr", p.expr_text}};
    j["column"] = p.column ? json(*p.column) : json(nullptr);
    return j;
}

ProgramPoint program_point_from_json(const json& j) {
    ProgramPoint p;
    p.file = j.at("file").get<std::string>();
    p.line = j.at("line").get<int>();
    if (j.contains("column") && !j["column"].is_null()) p.column = j["column"].get<int>();
    p.expr_text = j.value("expr", std::string());
    return p;
}

json to_json(const Warning& w) {
    json trace = json::array();
    for (const auto& f : w.trace) trace.push_back({{"name", f.name}, {"file", f.file}});
    json edges = json::array();
    for (const auto& e : w.call_edges) edges.push_back({{"site", to_json(e.site)}, {"downward", e.downward}});
    json j{{"id", w.id},
           {"bug_type", to_string(w.bug_type)},
           {"rule", w.rule},
           {"analyzer", to_string(w.analyzer)},
           {"target_var", w.pair.target_var},
           {"aliases", w.pair.aliases},
           {"source", to_json(w.pair.source)},
           {"sink", to_json(w.pair.sink)},
           {"trace", trace},
           {"call_edges", edges}};
    j["label"] = w.label ? json(to_string(*w.label)) : json(nullptr);
    return j;
}

Warning warning_from_json(const json& j) {
    try {
        Warning w;
        w.id = j.at("id").get<std::string>();
        w.bug_type = bug_type_from_string(j.at("bug_type").get<std::string>());
        w.rule = j.value("rule", std::string());
        w.analyzer = analyzer_from_string(j.value("analyzer", std::string("Other")));
        w.pair.target_var = j.at("target_var").get<std::string>();
        w.pair.aliases = j.value("aliases", std::vector<std::string>{});
        w.pair.source = program_point_from_json(j.at("source"));
        w.pair.sink = program_point_from_json(j.at("sink"));
        for (const auto& f : j.at("trace")) w.trace.push_back({f.at("name"), f.at("file")});
        for (const auto& e : j.value("call_edges", json::array())) {
            w.call_edges.push_back({program_point_from_json(e.at("site")), e.value("downward", true)});
        }
        if (j.contains("label") && !j["label"].is_null()) w.label = label_from_string(j["label"].get<std::string>());
        if (w.trace.empty()) throw Error(ErrorCode::MalformedReport, "warning " + w.id + " has an empty trace");
        if (w.call_edges.size() + 1 != w.trace.size()) {
            throw Error(ErrorCode::MalformedReport, "warning " + w.id + ": call_edges must link adjacent trace entries");
        }
        return w;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedReport, std::string("warning JSON: ") + e.what());
    }
}

void write_warnings_jsonl(const fs::path& path, const std::vector<Warning>& warnings) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::MalformedReport, "cannot write " + path.string());
    for (const auto& w : warnings) out << to_json(w).dump() << "\n";
}

std::vector<Warning> read_warnings_jsonl(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MalformedReport, "cannot read " + path.string());
    std::vector<Warning> out;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        try {
            out.push_back(warning_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::MalformedReport, std::string("JSONL: ") + e.what());
        }
    }
    return out;
}

}  // namespace pfa
