// SPDX-License-Identifier: Apache-2.0
#include "pfa/fpe.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "pfa/cexpr.hpp"
#include "pfa/error.hpp"
#include "pfa/lexer.hpp"

namespace pfa {

using nlohmann::json;

namespace {

// Arguments of the first call to `callee` in `text`, as normalized strings.
// `x = callee(...)` on the call line: the variable receiving the tracked value.
std::optional<std::string> assigned_from_call(const std::string& text, const std::string& callee) {
    const auto toks = lex_c(text);
    for (std::size_t k = 0; k + 2 < toks.size(); ++k) {
        if (toks[k + 1].is("=") && toks[k + 2].is_ident() && toks[k + 2].text == callee) {
            if (toks[k].is_ident()) return toks[k].text;
        }
    }
    return std::nullopt;
}

std::vector<Literal> to_literals(const FunctionCfg& cfg, const std::vector<NestEntry>& nest) {
    std::vector<Literal> out;
    for (const auto& n : nest) out.push_back(Literal{n.cond, cfg.cond_nodes[n.cond].condition, n.arm});
    return out;
}

std::string literal_text(const Literal& l) { return l.positive ? l.text : negate_condition(l.text); }

// Blocks reachable from `start` over forward edges. Blocks in `stop` are
// recorded but not expanded.
std::vector<bool> reach(const FunctionCfg& cfg, const std::vector<std::size_t>& start,
                        std::optional<std::size_t> stop) {
    std::vector<bool> seen(cfg.blocks.size(), false);
    std::deque<std::size_t> work;
    for (auto s : start) {
        if (!seen[s]) {
            seen[s] = true;
            work.push_back(s);
        }
    }
    while (!work.empty()) {
        const std::size_t b = work.front();
        work.pop_front();
        if (stop && b == *stop) continue;
        for (auto succ : cfg.forward_successors(b)) {
            if (!seen[succ]) {
                seen[succ] = true;
                work.push_back(succ);
            }
        }
    }
    return seen;
}

}  // namespace

std::string negate_condition(const std::string& text) {
    try {
        const auto e = parse_c_expr(text);
        if (e->kind == ExprKind::Unary && e->op == "!") return print_expr(*e->kids[0]);
        return normalize_condition("!(" + text + ")");
    } catch (const Error&) {
        return "!(" + text + ")";
    }
}

std::vector<SegmentSpec> segment_trace(const Warning& w, const CodeIndex& index) {
    if (w.trace.empty()) throw Error(ErrorCode::SegmentationError, "warning " + w.id + " has an empty trace");
    if (w.call_edges.size() + 1 != w.trace.size()) {
        throw Error(ErrorCode::SegmentationError, "warning " + w.id + ": call edges do not link the trace");
    }
    const std::size_t n = w.trace.size();
    std::vector<SegmentSpec> segs(n);
    std::string target = w.pair.target_var;
    std::vector<std::string> aliases = w.pair.aliases;
    for (std::size_t i = 0; i < n; ++i) {
        SegmentSpec& s = segs[i];
        s.function = w.trace[i];
        const FunctionDef* def = index.find(s.function);
        if (def == nullptr) {
            throw Error(ErrorCode::SegmentationError, "function " + s.function.name + " is not indexed");
        }
        const ProgramPoint start{def->file, def->body_line, std::nullopt, "{"};
        const ProgramPoint end{def->file, def->end_line, std::nullopt, "}"};
        s.target_var = target;

        if (i == 0) {
            const bool single_point = w.pair.source.file == w.pair.sink.file && w.pair.source.line == w.pair.sink.line;
            s.entry = single_point && n == 1 ? start : w.pair.source;
            s.entry_is_function_start = single_point && n == 1;
        } else if (w.call_edges[i - 1].downward) {
            s.entry = start;
            s.entry_is_function_start = true;
        } else {
            s.entry = w.call_edges[i - 1].site;
        }

        if (i + 1 == n) {
            s.exit = w.pair.sink;
        } else {
            const CallEdge& edge = w.call_edges[i];
            const FunctionDef* caller = edge.downward ? def : index.find(w.trace[i + 1]);
            const std::string callee = edge.downward ? w.trace[i + 1].name : s.function.name;
            if (caller == nullptr) {
                throw Error(ErrorCode::SegmentationError, "function " + w.trace[i + 1].name + " is not indexed");
            }
            const auto lines = call_lines(*caller, callee);
            if (std::find(lines.begin(), lines.end(), edge.site.line) == lines.end()) {
                throw Error(ErrorCode::SegmentationError, caller->name + " does not call " + callee + " at line " +
                                                              std::to_string(edge.site.line));
            }
            if (edge.downward) {
                s.exit = edge.site;
                s.exit_call = edge;
                const FunctionDef* next = index.find(w.trace[i + 1]);
                const auto call = call_on_line(edge.site.expr_text, callee);
                const auto args = call ? std::optional(call->args) : std::nullopt;
                if (next != nullptr && args) {
                    for (std::size_t a = 0; a < args->size() && a < next->params.size(); ++a) {
                        const std::string& arg = (*args)[a];
                        if (arg == target || std::find(aliases.begin(), aliases.end(), arg) != aliases.end()) {
                            target = next->params[a];
                            aliases.clear();
                            break;
                        }
                    }
                }
            } else {
                s.exit = end;
                s.exit_is_function_end = true;
                if (auto lhs = assigned_from_call(edge.site.expr_text, callee)) {
                    target = *lhs;
                    aliases.clear();
                }
            }
        }
    }
    return segs;
}

CfgPosition entry_position(const FunctionCfg& cfg, const SegmentSpec& seg) {
    if (seg.entry_is_function_start) return CfgPosition{cfg.entry, 0};
    auto pos = cfg.locate(seg.entry.line);
    if (!pos) {
        throw Error(ErrorCode::SegmentationError,
                    "entry " + seg.entry.file + ":" + std::to_string(seg.entry.line) + " is not a statement of " +
                        seg.function.name);
    }
    return *pos;
}

CfgPosition exit_position(const FunctionCfg& cfg, const SegmentSpec& seg) {
    if (seg.exit_is_function_end) return CfgPosition{cfg.exit, 0};
    auto pos = cfg.locate(seg.exit.line);
    if (!pos) {
        throw Error(ErrorCode::SegmentationError,
                    "exit " + seg.exit.file + ":" + std::to_string(seg.exit.line) + " is not a statement of " +
                        seg.function.name);
    }
    return *pos;
}

CriticalBranchSet extract_critical_branches(const FunctionCfg& cfg, const SegmentSpec& seg) {
    const CfgPosition s = entry_position(cfg, seg);
    const CfgPosition t = exit_position(cfg, seg);
    CriticalBranchSet out;

    const bool same_block_forward = s.block == t.block && s.index <= t.index;
    if (!same_block_forward) {
        const auto from_s = reach(cfg, cfg.forward_successors(s.block), std::nullopt);
        if (!from_s[t.block]) out.exit_unreachable = true;
    }

    out.n_e = to_literals(cfg, cfg.blocks[t.block].nesting);

    // Blocks reachable from S_f without passing T_f.
    std::vector<bool> before_t(cfg.blocks.size(), false);
    if (!same_block_forward) {
        before_t = reach(cfg, {s.block}, t.block);
    }
    for (std::size_t j = 0; j < cfg.jump_nodes.size(); ++j) {
        const JumpNode& jump = cfg.jump_nodes[j];
        if (jump.block == t.block || !before_t[jump.block]) continue;
        std::vector<std::size_t> targets;
        for (const CfgEdge* e : cfg.out_edges(jump.block)) {
            if (e->kind == EdgeKind::Jump && !e->back) targets.push_back(e->to);
        }
        if (!targets.empty() && reach(cfg, targets, std::nullopt)[t.block]) continue;
        if (jump.guarding_conds.empty()) continue;
        // Only jumps that divert a route to T_f: the other arm of some guard must lead there.
        bool diverts = false;
        for (const NestEntry& guard : jump.guarding_conds) {
            const std::size_t cond_block = cfg.cond_nodes[guard.cond].block;
            std::vector<std::size_t> other_arm;
            for (const CfgEdge* e : cfg.out_edges(cond_block)) {
                if (!e->back && e->kind == (guard.arm ? EdgeKind::False : EdgeKind::True)) other_arm.push_back(e->to);
            }
            if (!other_arm.empty() && reach(cfg, other_arm, std::nullopt)[t.block]) {
                diverts = true;
                break;
            }
        }
        if (!diverts) continue;
        out.n_jump.push_back(JumpGuard{j, jump.kind, jump.line, to_literals(cfg, jump.guarding_conds)});
    }
    return out;
}

Fpe compute_fpe(const CriticalBranchSet& branches) {
    Fpe fpe;
    if (branches.exit_unreachable) {
        fpe.infeasible = true;
        return fpe;
    }
    std::set<std::string> seen_hold;
    for (const auto& lit : branches.n_e) {
        if (lit.text.empty()) continue;
        ConditionExpr c{literal_text(lit), {lit}};
        if (seen_hold.insert(c.text).second) fpe.must_hold.push_back(std::move(c));
    }
    std::set<std::string> seen_jump;
    for (const auto& jg : branches.n_jump) {
        ConditionExpr c;
        std::vector<std::string> parts;
        for (const auto& lit : jg.guards) {
            if (lit.text.empty()) continue;
            const std::string part = literal_text(lit);
            if (std::find(parts.begin(), parts.end(), part) != parts.end()) continue;
            parts.push_back(part);
            c.literals.push_back(lit);
        }
        if (parts.empty()) continue;
        std::string text;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            text += (i ? " && " : "") + (parts.size() > 1 ? "(" + parts[i] + ")" : parts[i]);
        }
        c.text = normalize_condition(text);
        if (seen_jump.insert(c.text).second) fpe.must_not_fully_hold.push_back(std::move(c));
    }
    return fpe;
}

namespace {

json literals_json(const std::vector<Literal>& lits) {
    json a = json::array();
    for (const auto& l : lits) a.push_back({{"cond", l.cond}, {"text", l.text}, {"positive", l.positive}});
    return a;
}

std::vector<Literal> literals_from(const json& a) {
    std::vector<Literal> out;
    for (const auto& l : a) out.push_back(Literal{l.at("cond"), l.at("text"), l.at("positive")});
    return out;
}

json exprs_json(const std::vector<ConditionExpr>& v) {
    json a = json::array();
    for (const auto& c : v) a.push_back({{"text", c.text}, {"literals", literals_json(c.literals)}});
    return a;
}

std::vector<ConditionExpr> exprs_from(const json& a) {
    std::vector<ConditionExpr> out;
    for (const auto& c : a) out.push_back(ConditionExpr{c.at("text"), literals_from(c.at("literals"))});
    return out;
}

}  // namespace

json to_json(const Fpe& fpe) {
    return json{{"must_hold", exprs_json(fpe.must_hold)},
                {"must_not_fully_hold", exprs_json(fpe.must_not_fully_hold)},
                {"infeasible", fpe.infeasible}};
}

Fpe fpe_from_json(const json& j) {
    Fpe f;
    f.must_hold = exprs_from(j.at("must_hold"));
    f.must_not_fully_hold = exprs_from(j.at("must_not_fully_hold"));
    f.infeasible = j.value("infeasible", false);
    return f;
}

}  // namespace pfa
