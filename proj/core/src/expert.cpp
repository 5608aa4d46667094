// SPDX-License-Identifier: Apache-2.0
#include "pfa/expert.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "pfa/c2smt.hpp"
#include "pfa/error.hpp"
#include "pfa/sexpr.hpp"
#include "pfa/smt.hpp"
#include "pfa/solver.hpp"

namespace pfa {

namespace {

RangeRule rule_from_json(const nlohmann::json& j) {
    RangeRule r;
    r.function = j.value("function", j.value("callee", ""));
    r.subject = j.value("var", "");
    r.when = j.value("when", "");
    r.need_context = j.value("need_context", "");
    r.kind = j.value("kind", r.need_context.empty() ? "unknown" : "");
    if (j.contains("value")) r.value = j["value"].is_string() ? j["value"].get<std::string>() : j["value"].dump();
    if (j.contains("low") && !j["low"].is_null()) r.low = j["low"].get<long long>();
    if (j.contains("high") && !j["high"].is_null()) r.high = j["high"].get<long long>();
    r.confidence = j.value("confidence", "definite");
    return r;
}

std::string range_answer(const RangeRule& r, const std::string& subject) {
    std::string block = "subject: " + subject + "\nkind: " + (r.kind.empty() ? "unknown" : r.kind) + "\n";
    if (!r.value.empty()) block += "value: " + r.value + "\n";
    if (r.low) block += "low: " + std::to_string(*r.low) + "\n";
    if (r.high) block += "high: " + std::to_string(*r.high) + "\n";
    block += "confidence: " + r.confidence + "\n";
    return "Walking the code under the given initial states.\n```range\n" + block + "```\n";
}

std::string unknown_answer(const std::string& subject) {
    return "Nothing constrains this value.\n```range\nsubject: " + subject + "\nkind: unknown\nconfidence: unknown\n```\n";
}

const RangeRule* find_rule(const std::vector<RangeRule>& rules, const std::string& function, const std::string& subject,
                           const std::string& states) {
    for (const auto& r : rules) {
        if (!r.function.empty() && r.function != function) continue;
        if (!r.subject.empty() && r.subject != subject) continue;
        if (!r.when.empty() && states.find(r.when) == std::string::npos) continue;
        return &r;
    }
    return nullptr;
}

std::string fill(const Fills& f, const std::string& k) {
    auto it = f.find(k);
    return it == f.end() ? std::string() : it->second;
}

SortMap parse_sort_lines(const std::string& text) {
    SortMap out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        const auto sep = line.rfind(" : ");
        if (sep == std::string::npos) continue;
        const auto s = smt_sort_from_string(line.substr(sep + 3));
        const std::string name = unquote_symbol(line.substr(0, sep));
        if (s && name != "null") out[name] = *s;
    }
    return out;
}

std::vector<std::string> numbered_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        const auto dot = line.find(". ");
        if (dot == std::string::npos || dot == 0) continue;
        if (line.find_first_not_of("0123456789") != dot) continue;
        out.push_back(line.substr(dot + 2));
    }
    return out;
}

std::string smt_fence(const std::string& body) { return "```smt2\n" + body + "```\n"; }

std::string declarations(const SortMap& sorts) {
    std::string out;
    for (const auto& [name, s] : sorts) out += "(declare-const " + quote_symbol(name) + " " + to_string(s) + ")\n";
    return out;
}

std::string convert_answer(const ExpertRules& rules, const Fills& fills) {
    const auto exprs = numbered_lines(fill(fills, "conditional_expressions"));
    for (const auto& f : rules.convert_faults) {
        for (const auto& e : exprs) {
            if (e.find(f.match) != std::string::npos) return f.response;
        }
    }
    SortMap sorts = parse_sort_lines(fill(fills, "symbol_sorts"));
    std::vector<std::string> asserts;
    SortMap used;
    for (const auto& e : exprs) {
        const auto t = translate_condition(e, sorts);
        for (const auto& [n, s] : t.symbols) {
            sorts.emplace(n, s);
            used.emplace(n, sorts.at(n));
        }
        asserts.push_back("(assert " + t.term + ")");
    }
    std::string body = declarations(used);
    for (const auto& a : asserts) body += a + "\n";
    return "Each expression becomes one assertion.\n" + smt_fence(body);
}

std::string merge_answer(const Fills& fills) {
    SortMap sorts = parse_sort_lines(fill(fills, "symbol_sorts"));
    SortMap used;
    for (const auto& e : numbered_lines(fill(fills, "additional_constraints"))) {
        const auto t = translate_condition(e, sorts);
        std::set<std::string> calls;
        for (const auto& a : condition_atoms(e)) {
            if (a.kind == AtomKind::Call) calls.insert(a.text);
        }
        // Call results get their sort once a range is known.
        for (const auto& [n, s] : t.symbols) {
            if (calls.contains(n)) continue;
            sorts.emplace(n, s);
            used.emplace(n, sorts.at(n));
        }
    }
    return "Declarations for the symbols used below.\n" + smt_fence(minimal_template() + declarations(used));
}

std::string fix_answer(const ExpertRules& rules, const Fills& fills) {
    const std::string script = fill(fills, "script");
    switch (rules.fix) {
        case FixMode::Echo: return smt_fence(script);
        case FixMode::Garbage: return "I could not find the problem.";
        case FixMode::Repair: break;
    }
    try {
        return "Declarations re-derived from usage.\n" + smt_fence(repair_smt_script(script));
    } catch (const Error&) {
        return smt_fence(script);
    }
}

bool script_errors(const std::string& text) {
    try {
        return interpret_reply(SolverReply{run_builtin_solver(text), false, 0}).error;
    } catch (const Error&) {
        return true;
    }
}

}  // namespace

ExpertRules expert_rules_from_json(const nlohmann::json& j) {
    ExpertRules r;
    for (const auto& v : j.value("variables", nlohmann::json::array())) r.variables.push_back(rule_from_json(v));
    for (const auto& c : j.value("calls", nlohmann::json::array())) r.calls.push_back(rule_from_json(c));
    for (const auto& f : j.value("convert_faults", nlohmann::json::array())) {
        r.convert_faults.push_back(ConvertFault{f.at("match").get<std::string>(), f.at("response").get<std::string>()});
    }
    const std::string fix = j.value("fix", "repair");
    if (fix == "repair") r.fix = FixMode::Repair;
    else if (fix == "echo") r.fix = FixMode::Echo;
    else if (fix == "garbage") r.fix = FixMode::Garbage;
    else throw Error(ErrorCode::ConfigError, "unknown fix mode '" + fix + "'");
    return r;
}

ExpertRules load_expert_rules(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read rules file " + file.string());
    try {
        return expert_rules_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigError, file.string() + ": " + e.what());
    }
}

std::string repair_smt_script(const std::string& script) {
    const auto cmds = parse_sexprs(script);
    std::vector<std::string> asserts;
    std::string preamble;
    for (const auto& c : cmds) {
        const std::string h = c.head();
        if (h == "assert") asserts.push_back(print_sexpr(c));
        else if (h == "set-logic" || h == "declare-sort") preamble += print_sexpr(c) + "\n";
    }
    if (preamble.find("declare-sort Ptr") == std::string::npos) preamble += "(declare-sort Ptr 0)\n";
    preamble += "(declare-const null Ptr)\n";
    std::string body;
    for (const auto& a : asserts) body += a + "\n";
    SortMap sorts;
    try {
        sorts = infer_sorts(body, {});
    } catch (const Error&) {
    }
    const std::string decls = declarations(sorts);
    std::string kept;
    for (const auto& a : asserts) {
        if (!script_errors(preamble + decls + a + "\n(check-sat)\n")) kept += a + "\n";
    }
    return normalize_smt(preamble + decls) + kept + "(check-sat)\n";
}

Responder expert_responder(ExpertRules rules) {
    return [rules = std::move(rules)](const PromptTemplate& t, const Fills& fills) -> std::string {
        switch (t.id) {
            case TemplateId::VarRange: {
                const std::string var = fill(fills, "variable");
                const auto* r = find_rule(rules.variables, fill(fills, "function_name"), var, fill(fills, "initial_states"));
                return r ? range_answer(*r, var) : unknown_answer(var);
            }
            case TemplateId::CallRange: {
                const std::string call = fill(fills, "call");
                const auto* r = find_rule(rules.calls, fill(fills, "function_name"), "", fill(fills, "initial_states"));
                if (!r) return unknown_answer(call);
                if (!r->need_context.empty() && fill(fills, "context") == "none") {
                    return "The result depends on " + r->need_context + ".\nNEED_CONTEXT: " + r->need_context + "\n";
                }
                // A delegating wrapper with no own answer stays unknown.
                if (r->kind.empty()) return unknown_answer(call);
                return range_answer(*r, call);
            }
            case TemplateId::SmtConvert: return convert_answer(rules, fills);
            case TemplateId::SmtMerge: return merge_answer(fills);
            case TemplateId::SmtFix: return fix_answer(rules, fills);
        }
        return {};
    };
}

}  // namespace pfa
