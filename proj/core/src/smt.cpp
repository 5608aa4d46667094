// SPDX-License-Identifier: Apache-2.0
#include "pfa/smt.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

#include "pfa/error.hpp"
#include "pfa/sexpr.hpp"

namespace pfa {

std::string minimal_template() { return "(set-logic ALL)\n(declare-sort Ptr 0)\n(declare-const null Ptr)\n"; }

std::string SmtScript::merged() const {
    std::string out = template_text;
    for (std::size_t i = 0; i < constraint_blocks.size(); ++i) {
        out += "; block " + std::to_string(i + 1) + "\n" + constraint_blocks[i];
        if (!constraint_blocks[i].empty() && constraint_blocks[i].back() != '\n') out += '\n';
    }
    return out + "(check-sat)\n";
}

namespace {

bool is_declaration(const SExpr& c) {
    const std::string h = c.head();
    return h == "declare-const" || h == "declare-fun";
}

bool is_preamble(const SExpr& c) {
    const std::string h = c.head();
    return h == "set-logic" || h == "set-option" || h == "set-info" || h == "declare-sort" || is_declaration(c);
}

std::string declared_name(const SExpr& c) { return c.items.size() > 1 ? unquote_symbol(c.items[1].text) : ""; }

std::optional<SmtSort> declared_sort(const SExpr& c) {
    if (!is_declaration(c) || c.items.size() < 3) return std::nullopt;
    if (c.head() == "declare-fun" && !(c.items.size() == 4 && c.items[2].is_list() && c.items[2].items.empty())) {
        return std::nullopt;
    }
    return smt_sort_from_string(unquote_symbol(c.items.back().text));
}

std::string declaration(const std::string& name, SmtSort s) {
    return "(declare-const " + quote_symbol(name) + " " + to_string(s) + ")";
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    return out;
}

class SortInference {
public:
    explicit SortInference(const SortMap& declared) : declared_(declared) {}

    SortMap run(const std::vector<SExpr>& terms) {
        for (int pass = 0; pass < 8; ++pass) {
            const auto before = inferred_.size();
            for (const auto& t : terms) visit(t, SmtSort::Bool);
            if (inferred_.size() == before && pass > 0) break;
        }
        for (const auto& name : used_) {
            if (!known(name)) inferred_[name] = SmtSort::Int;
        }
        return inferred_;
    }

private:
    std::optional<SmtSort> known(const std::string& name) const {
        if (name == "null") return SmtSort::Ptr;
        if (auto it = declared_.find(name); it != declared_.end()) return it->second;
        if (auto it = inferred_.find(name); it != inferred_.end()) return it->second;
        return std::nullopt;
    }

    std::optional<SmtSort> visit(const SExpr& e, std::optional<SmtSort> expected) {
        if (e.kind == SExpr::Kind::Numeral) return SmtSort::Int;
        if (e.kind == SExpr::Kind::Symbol) {
            if (e.text == "true" || e.text == "false") return SmtSort::Bool;
            const std::string name = unquote_symbol(e.text);
            if (bound_.contains(name)) return std::nullopt;
            used_.insert(name);
            if (auto s = known(name)) return s;
            if (expected) inferred_[name] = *expected;
            return expected;
        }
        if (!e.is_list() || e.items.empty()) return std::nullopt;
        const std::string h = e.head();
        auto all = [&](std::optional<SmtSort> s) {
            for (std::size_t i = 1; i < e.items.size(); ++i) visit(e.items[i], s);
        };
        if (h == "not" || h == "and" || h == "or" || h == "=>" || h == "xor") {
            all(SmtSort::Bool);
            return SmtSort::Bool;
        }
        if (h == "<" || h == "<=" || h == ">" || h == ">=") {
            all(SmtSort::Int);
            return SmtSort::Bool;
        }
        if (h == "+" || h == "-" || h == "*" || h == "div" || h == "mod" || h == "abs") {
            all(SmtSort::Int);
            return SmtSort::Int;
        }
        if (h == "=" || h == "distinct") {
            std::optional<SmtSort> s;
            for (std::size_t i = 1; i < e.items.size() && !s; ++i) s = visit(e.items[i], std::nullopt);
            if (s) all(s);
            return SmtSort::Bool;
        }
        if (h == "ite" && e.items.size() == 4) {
            visit(e.items[1], SmtSort::Bool);
            auto a = visit(e.items[2], expected);
            auto b = visit(e.items[3], expected);
            auto s = expected ? expected : (a ? a : b);
            if (s) {
                visit(e.items[2], s);
                visit(e.items[3], s);
            }
            return s;
        }
        if (h == "let" && e.items.size() == 3 && e.items[1].is_list()) {
            for (const auto& b : e.items[1].items) {
                if (b.is_list() && b.items.size() == 2) {
                    visit(b.items[1], std::nullopt);
                    bound_.insert(unquote_symbol(b.items[0].text));
                }
            }
            return visit(e.items[2], expected);
        }
        all(std::nullopt);
        return std::nullopt;
    }

    const SortMap& declared_;
    SortMap inferred_;
    std::set<std::string> used_;
    std::set<std::string> bound_;
};

bool is_infrastructure(const Error& e) {
    return e.code() == ErrorCode::BackendError || e.code() == ErrorCode::ReplayMiss ||
           e.code() == ErrorCode::InjectedFault;
}

}  // namespace

SmtScript split_script(const std::string& text) {
    static const std::regex marker(R"(^\s*;\s*block\s+\d+\s*$)");
    std::vector<std::string> chunks(1);
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        if (std::regex_match(line, marker)) {
            chunks.emplace_back();
            continue;
        }
        chunks.back() += line + "\n";
    }
    SmtScript s;
    std::vector<std::string> preamble;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        std::vector<std::string> block;
        for (const auto& c : parse_sexprs(chunks[i])) {
            if (is_preamble(c)) preamble.push_back(print_sexpr(c));
            else if (c.head() == "assert") block.push_back(print_sexpr(c));
        }
        if (i > 0 || !block.empty()) s.constraint_blocks.push_back(join_lines(block));
    }
    s.template_text = normalize_smt(join_lines(preamble));
    return s;
}

SortMap declared_symbols(const std::string& smt_text) {
    SortMap out;
    std::vector<SExpr> cmds;
    try {
        cmds = parse_sexprs(smt_text);
    } catch (const Error&) {
        return out;
    }
    for (const auto& c : cmds) {
        if (auto s = declared_sort(c)) {
            const std::string name = declared_name(c);
            if (name != "null") out.emplace(name, *s);
        }
    }
    return out;
}

SortMap infer_sorts(const std::string& assertions, const SortMap& declared) {
    std::vector<SExpr> terms;
    for (const auto& c : parse_sexprs(assertions)) {
        if (c.head() == "assert" && c.items.size() == 2) terms.push_back(c.items[1]);
    }
    return SortInference(declared).run(terms);
}

std::string normalize_smt(const std::string& text) {
    const auto cmds = parse_sexprs(text);
    std::vector<std::string> logic;
    std::vector<std::string> sorts;
    std::vector<std::pair<std::string, std::string>> decls;
    std::vector<std::string> rest;
    std::set<std::string> seen;
    for (const auto& c : cmds) {
        std::string line = print_sexpr(c);
        if (!seen.insert(line).second) continue;
        const std::string h = c.head();
        if (h == "set-logic") {
            if (logic.empty()) logic.push_back(line);
        } else if (h == "declare-sort") {
            sorts.push_back(line);
        } else if (is_declaration(c)) {
            decls.emplace_back(declared_name(c), line);
        } else {
            rest.push_back(line);
        }
    }
    std::stable_sort(decls.begin(), decls.end(), [](const auto& a, const auto& b) {
        // `null` stays first among the pointer declarations
        if ((a.first == "null") != (b.first == "null")) return a.first == "null";
        return a.first < b.first;
    });
    std::string out = join_lines(logic) + join_lines(sorts);
    for (const auto& [n, l] : decls) out += l + "\n";
    return out + join_lines(rest);
}

std::optional<std::string> range_assertion(const SymbolicRange& r, std::optional<SmtSort> sort) {
    const std::string s = atom_symbol(r.subject);
    auto natural = [&]() -> SmtSort {
        switch (r.kind) {
            case RangeKind::NullState: return SmtSort::Ptr;
            case RangeKind::Boolean: return SmtSort::Bool;
            default: return SmtSort::Int;
        }
    };
    const SmtSort so = sort.value_or(natural());
    auto zero = [&]() { return so == SmtSort::Ptr ? std::string("null") : std::string("0"); };
    auto is_zero = [&](bool yes) -> std::string {
        if (so == SmtSort::Bool) return yes ? "(= " + s + " false)" : "(= " + s + " true)";
        const std::string eq = "(= " + s + " " + zero() + ")";
        return yes ? eq : "(not " + eq + ")";
    };
    switch (r.kind) {
        case RangeKind::Unknown:
            return std::nullopt;
        case RangeKind::Boolean:
            return "(assert " + is_zero(!r.bool_value) + ")";
        case RangeKind::NullState:
            if (r.null_state == NullState::Unknown) return std::nullopt;
            return "(assert " + is_zero(r.null_state == NullState::Null) + ")";
        case RangeKind::Interval: {
            if (so == SmtSort::Int) {
                auto lit = [](std::int64_t v) { return v < 0 ? "(- " + std::to_string(-v) + ")" : std::to_string(v); };
                std::vector<std::string> parts;
                if (r.low) parts.push_back("(<= " + lit(*r.low) + " " + s + ")");
                if (r.high) parts.push_back("(<= " + s + " " + lit(*r.high) + ")");
                if (parts.empty()) return std::nullopt;
                if (parts.size() == 1) return "(assert " + parts[0] + ")";
                return "(assert (and " + parts[0] + " " + parts[1] + "))";
            }
            const bool exactly_zero = r.low && r.high && *r.low == 0 && *r.high == 0;
            const bool excludes_zero = (r.low && *r.low > 0) || (r.high && *r.high < 0);
            if (exactly_zero) return "(assert " + is_zero(true) + ")";
            if (excludes_zero) return "(assert " + is_zero(false) + ")";
            return std::nullopt;
        }
        case RangeKind::Predicate: {
            SortMap hints;
            if (sort) hints.emplace(r.subject, *sort);
            return "(assert " + translate_condition(r.predicate, hints).term + ")";
        }
    }
    return std::nullopt;
}

std::string render_sorts(const SortMap& sorts) {
    std::string out = "null : Ptr\n";
    for (const auto& [name, s] : sorts) out += atom_symbol(name) + " : " + to_string(s) + "\n";
    return out;
}

std::optional<std::string> smt_payload(const std::string& answer) {
    for (const char* tag : {"smt2", "smt", "lisp", ""}) {
        if (auto b = fenced_block(answer, tag)) return b;
    }
    const auto first = answer.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && answer[first] == '(') return answer.substr(first);
    return std::nullopt;
}

std::string generate_template(const std::vector<FeasiblePathConstraint>& preview, LlmBackend& llm,
                              const SortMap& hints, SmtNotes* notes) {
    if (preview.empty()) return minimal_template();
    std::string exprs;
    for (std::size_t i = 0; i < preview.size(); ++i) {
        exprs += std::to_string(i + 1) + ". " + preview[i].expr.text + "\n";
    }
    const Fills fills{{"smt_query_script", minimal_template()},
                      {"additional_constraints", exprs},
                      {"symbol_sorts", render_sorts(hints)}};
    try {
        const auto payload = smt_payload(llm.complete(prompt_template(TemplateId::SmtMerge), fills));
        if (!payload) throw Error(ErrorCode::ConversionUnparseable, "template answer has no SMT block");
        std::vector<std::string> keep;
        for (const auto& c : parse_sexprs(*payload)) {
            if (is_preamble(c)) keep.push_back(print_sexpr(c));
        }
        const std::string text = normalize_smt(minimal_template() + join_lines(keep));
        // The template alone must be accepted by a solver.
        const auto check = interpret_reply(SolverReply{run_builtin_solver(text + "(check-sat)\n"), false, 0});
        if (check.error || check.result != SatResult::SAT) {
            throw Error(ErrorCode::ConversionUnparseable, "template rejected: " + check.diagnostic);
        }
        return normalize_smt(text);
    } catch (const Error& e) {
        if (notes) {
            notes->diagnostics.push_back(std::string("template fallback: ") + e.what());
            if (is_infrastructure(e)) notes->degraded = true;
        }
        return minimal_template();
    }
}

namespace {

struct ConvertedTerm {
    std::vector<std::string> declarations;
    std::string term;
};

// Parses an answer into declarations and `expected` assertion terms.
std::optional<std::vector<ConvertedTerm>> parse_conversion(const std::string& answer, std::size_t expected,
                                                           std::string& problem) {
    const auto payload = smt_payload(answer);
    if (!payload) {
        problem = "no ```smt2 block";
        return std::nullopt;
    }
    std::vector<SExpr> cmds;
    try {
        cmds = parse_sexprs(*payload);
    } catch (const Error& e) {
        problem = e.what();
        return std::nullopt;
    }
    std::vector<std::string> decls;
    std::vector<std::string> terms;
    for (const auto& c : cmds) {
        if (is_declaration(c)) decls.push_back(print_sexpr(c));
        else if (c.head() == "assert" && c.items.size() == 2) terms.push_back(print_sexpr(c.items[1]));
    }
    if (terms.empty() || (expected > 1 && terms.size() != expected)) {
        problem = "expected " + std::to_string(expected) + " assertion(s), got " + std::to_string(terms.size());
        return std::nullopt;
    }
    std::vector<ConvertedTerm> out;
    if (expected == 1) {
        std::string t = terms.size() == 1 ? terms[0] : "(and";
        if (terms.size() > 1) {
            for (const auto& x : terms) t += " " + x;
            t += ")";
        }
        out.push_back(ConvertedTerm{decls, t});
    } else {
        for (std::size_t i = 0; i < terms.size(); ++i) out.push_back(ConvertedTerm{i == 0 ? decls : std::vector<std::string>{}, terms[i]});
    }
    return out;
}

std::string assemble_block(const FeasiblePathConstraint& c, const ConvertedTerm& t, const SortMap& hints) {
    std::vector<std::string> lines = t.declarations;
    SortMap sorts = hints;
    for (const auto& [n, s] : declared_symbols(join_lines(t.declarations))) sorts[n] = s;
    lines.push_back(c.polarity == Polarity::MustHold ? "(assert " + t.term + ")"
                                                     : "(assert (not " + t.term + "))");
    for (const auto& r : c.ranges) {
        std::optional<SmtSort> s;
        if (auto it = sorts.find(r.subject); it != sorts.end()) s = it->second;
        if (auto a = range_assertion(r, s)) {
            if (std::find(lines.begin(), lines.end(), *a) == lines.end()) lines.push_back(*a);
        }
    }
    return join_lines(lines);
}

std::string numbered(const std::vector<FeasiblePathConstraint>& cs) {
    std::string s;
    for (std::size_t i = 0; i < cs.size(); ++i) s += std::to_string(i + 1) + ". " + cs[i].expr.text + "\n";
    return s;
}

SortMap conversion_sorts(const std::vector<FeasiblePathConstraint>& cs, const SortMap& hints) {
    std::vector<SymbolicRange> ranges;
    for (const auto& c : cs) ranges.insert(ranges.end(), c.ranges.begin(), c.ranges.end());
    SortMap s = sort_hints({}, "", {}, ranges);
    for (const auto& [k, v] : hints) s[k] = v;
    return s;
}

}  // namespace

std::string convert_constraint(const FeasiblePathConstraint& c, LlmBackend& llm, const SortMap& hints) {
    return convert_batch({c}, llm, hints).front();
}

std::vector<std::string> convert_batch(const std::vector<FeasiblePathConstraint>& cs, LlmBackend& llm,
                                       const SortMap& hints) {
    if (cs.empty()) return {};
    const SortMap sorts = conversion_sorts(cs, hints);
    Fills fills{{"conditional_expressions", numbered(cs)}, {"symbol_sorts", render_sorts(sorts)}, {"feedback", ""}};
    std::string problem;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const std::string answer = llm.complete(prompt_template(TemplateId::SmtConvert), fills);
        if (auto parsed = parse_conversion(answer, cs.size(), problem)) {
            std::vector<std::string> blocks;
            for (std::size_t i = 0; i < cs.size(); ++i) blocks.push_back(assemble_block(cs[i], (*parsed)[i], sorts));
            return blocks;
        }
        fills["feedback"] = "Your previous answer could not be used (" + problem +
                            "). Return exactly one (assert ...) per expression inside a ```smt2 block.";
    }
    throw Error(ErrorCode::ConversionUnparseable, problem);
}

std::string initial_states_block(const InitialStates& p, const SortMap& hints) {
    std::vector<std::string> lines;
    auto add = [&](const std::string& l) {
        if (std::find(lines.begin(), lines.end(), l) == lines.end()) lines.push_back(l);
    };
    SortMap sorts = hints;
    for (const auto& a : p.assumptions) {
        const auto t = translate_condition(a, sorts);
        sorts.insert(t.symbols.begin(), t.symbols.end());
        add("(assert " + t.term + ")");
    }
    for (const auto& c : p.propagated) {
        const auto t = translate_condition(c.asserted_text(), sorts);
        sorts.insert(t.symbols.begin(), t.symbols.end());
        add("(assert " + t.term + ")");
        for (const auto& r : c.ranges) {
            std::optional<SmtSort> s;
            if (auto it = sorts.find(r.subject); it != sorts.end()) s = it->second;
            if (auto a = range_assertion(r, s)) add(*a);
        }
    }
    return join_lines(lines);
}

void merge_block(SolveSession& session, const std::string& block, const SortMap& preferred) {
    if (session.closed) throw Error(ErrorCode::SolverError, "session is closed");
    std::vector<SExpr> cmds;
    try {
        cmds = parse_sexprs(block);
    } catch (const Error&) {
        // Left for the solver to report, which starts a repair.
        session.script.constraint_blocks.push_back(block);
        return;
    }
    SortMap declared = session.sorts();
    std::string preamble = session.script.template_text;
    std::vector<std::string> asserts;
    for (const auto& c : cmds) {
        if (is_declaration(c)) {
            const std::string name = declared_name(c);
            if (!declared.contains(name) && name != "null") {
                preamble += print_sexpr(c) + "\n";
                if (auto s = declared_sort(c)) declared[name] = *s;
            }
        } else if (c.head() == "assert") {
            asserts.push_back(print_sexpr(c));
        } else if (is_preamble(c)) {
            preamble += print_sexpr(c) + "\n";
        }
    }
    const std::string body = join_lines(asserts);
    SortMap missing;
    try {
        for (const auto& [n, s] : infer_sorts(body, declared)) {
            auto it = preferred.find(n);
            missing[n] = it != preferred.end() ? it->second : s;
        }
    } catch (const Error&) {
    }
    for (const auto& [n, s] : missing) preamble += declaration(n, s) + "\n";
    try {
        session.script.template_text = normalize_smt(preamble);
    } catch (const Error&) {
        session.script.template_text = preamble;
    }
    session.script.constraint_blocks.push_back(body);
}

SmtScript repair_script(SolveSession& session, const std::string& diagnostic, LlmBackend& llm) {
    if (session.repair_attempts >= session.max_repairs) {
        throw Error(ErrorCode::SolverError, "repair limit reached");
    }
    ++session.repair_attempts;
    const Fills fills{{"script", session.script.merged()}, {"error_message", diagnostic}};
    const auto payload = smt_payload(llm.complete(prompt_template(TemplateId::SmtFix), fills));
    if (!payload) throw Error(ErrorCode::ConversionUnparseable, "repair answer has no SMT block");
    try {
        return split_script(*payload);
    } catch (const Error& e) {
        throw Error(ErrorCode::ConversionUnparseable, std::string("repair does not parse: ") + e.what());
    }
}

SatResult solve_session(SolveSession& session, SolverHandle& solver, LlmBackend* repair_llm) {
    while (true) {
        const SolverOutcome o = interpret_reply(solver.run(session.script.merged()));
        ++session.solver_calls;
        if (!o.error) {
            session.verdicts.push_back(o.result);
            if (o.result == SatResult::UNSAT) session.closed = true;
            return o.result;
        }
        session.diagnostics.push_back(o.diagnostic);
        while (true) {
            if (repair_llm == nullptr || session.repair_attempts >= session.max_repairs) {
                session.failed = true;
                session.closed = true;
                session.verdicts.push_back(SatResult::UNKNOWN);
                return SatResult::UNKNOWN;
            }
            try {
                session.script = repair_script(session, o.diagnostic, *repair_llm);
                break;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::ConversionUnparseable) throw;
                session.diagnostics.push_back(e.what());
            }
        }
    }
}

SatResult merge_and_solve(SolveSession& session, const std::string& block, SolverHandle& solver,
                          LlmBackend* repair_llm) {
    merge_block(session, block);
    return solve_session(session, solver, repair_llm);
}

}  // namespace pfa
