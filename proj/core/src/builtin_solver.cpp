// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "pfa/error.hpp"
#include "pfa/sexpr.hpp"
#include "pfa/solver.hpp"

namespace pfa {

namespace {

constexpr int kBool = 0;
constexpr int kInt = 1;

enum class Op {
    Const, Var, Not, And, Or, Implies, Xor, Eq, Distinct, Ite,
    Add, Sub, Neg, Mul, Div, Mod, Abs, Lt, Le, Gt, Ge
};

struct Node {
    Op op = Op::Const;
    int sort = kBool;
    std::int64_t value = 0;  // Const value or Var index
    std::vector<int> kids;
};

struct TypeError {
    int line;
    int column;
    std::string what;
};

struct VarInfo {
    std::string name;
    int sort;
};

class Problem {
public:
    std::vector<std::string> sort_names{"Bool", "Int"};
    std::map<std::string, int> sorts{{"Bool", kBool}, {"Int", kInt}};
    std::map<std::string, int> consts;  // symbol -> var index
    std::vector<VarInfo> vars;
    std::vector<Node> nodes;
    std::vector<int> assertions;

    int add(Node n) {
        nodes.push_back(std::move(n));
        return static_cast<int>(nodes.size()) - 1;
    }

    std::string sort_name(int s) const { return sort_names[static_cast<std::size_t>(s)]; }

    int resolve_sort(const SExpr& e) {
        if (e.kind != SExpr::Kind::Symbol) throw TypeError{e.line, e.column, "invalid sort"};
        auto it = sorts.find(unquote_symbol(e.text));
        if (it == sorts.end()) throw TypeError{e.line, e.column, "unknown sort '" + unquote_symbol(e.text) + "'"};
        return it->second;
    }

    using Scope = std::map<std::string, int>;

    int compile(const SExpr& e, const Scope& scope) {
        switch (e.kind) {
            case SExpr::Kind::Numeral: {
                Node n{Op::Const, kInt, 0, {}};
                try {
                    n.value = std::stoll(e.text);
                } catch (const std::exception&) {
                    throw TypeError{e.line, e.column, "numeral out of range"};
                }
                return add(n);
            }
            case SExpr::Kind::String:
            case SExpr::Kind::Keyword:
                throw TypeError{e.line, e.column, "unsupported term"};
            case SExpr::Kind::Symbol: {
                const std::string name = unquote_symbol(e.text);
                if (e.text == "true" || e.text == "false") return add(Node{Op::Const, kBool, e.text == "true", {}});
                if (auto it = scope.find(name); it != scope.end()) return it->second;
                auto it = consts.find(name);
                if (it == consts.end()) throw TypeError{e.line, e.column, "unknown constant " + name};
                return add(Node{Op::Var, vars[static_cast<std::size_t>(it->second)].sort, it->second, {}});
            }
            case SExpr::Kind::List:
                break;
        }
        if (e.items.empty()) throw TypeError{e.line, e.column, "invalid empty term"};
        const std::string head = e.head();
        if (head == "let") return compile_let(e, scope);
        if (head.empty()) throw TypeError{e.line, e.column, "invalid function application"};
        std::vector<int> kids;
        for (std::size_t i = 1; i < e.items.size(); ++i) kids.push_back(compile(e.items[i], scope));

        auto mismatch = [&](std::size_t arg, const std::string& sig, int got) {
            throw TypeError{e.line, e.column,
                            "Sort mismatch at argument #" + std::to_string(arg + 1) + " for function (declare-fun " +
                                head + " " + sig + ") supplied sort is " + sort_name(got)};
        };
        auto expect_all = [&](int sort, const std::string& sig) {
            for (std::size_t i = 0; i < kids.size(); ++i) {
                if (nodes[static_cast<std::size_t>(kids[i])].sort != sort) {
                    mismatch(i, sig, nodes[static_cast<std::size_t>(kids[i])].sort);
                }
            }
        };
        auto arity = [&](std::size_t lo, std::size_t hi) {
            if (kids.size() < lo || kids.size() > hi) {
                throw TypeError{e.line, e.column, "invalid number of arguments to " + head};
            }
        };
        static const std::map<std::string, Op> bool_ops{
            {"not", Op::Not}, {"and", Op::And}, {"or", Op::Or}, {"=>", Op::Implies}, {"xor", Op::Xor}};
        static const std::map<std::string, Op> arith_ops{
            {"+", Op::Add}, {"*", Op::Mul}, {"div", Op::Div}, {"mod", Op::Mod}, {"abs", Op::Abs}};
        static const std::map<std::string, Op> cmp_ops{{"<", Op::Lt}, {"<=", Op::Le}, {">", Op::Gt}, {">=", Op::Ge}};

        if (auto it = bool_ops.find(head); it != bool_ops.end()) {
            if (it->second == Op::Not) arity(1, 1);
            else arity(it->second == Op::Implies || it->second == Op::Xor ? 2 : 1, SIZE_MAX);
            expect_all(kBool, it->second == Op::Not ? "(Bool) Bool" : "(Bool Bool) Bool");
            return add(Node{it->second, kBool, 0, kids});
        }
        if (head == "-") {
            arity(1, SIZE_MAX);
            expect_all(kInt, "(Int Int) Int");
            return add(Node{kids.size() == 1 ? Op::Neg : Op::Sub, kInt, 0, kids});
        }
        if (auto it = arith_ops.find(head); it != arith_ops.end()) {
            if (it->second == Op::Abs) arity(1, 1);
            else if (it->second == Op::Div || it->second == Op::Mod) arity(2, 2);
            else arity(1, SIZE_MAX);
            expect_all(kInt, it->second == Op::Abs ? "(Int) Int" : "(Int Int) Int");
            return add(Node{it->second, kInt, 0, kids});
        }
        if (auto it = cmp_ops.find(head); it != cmp_ops.end()) {
            arity(2, SIZE_MAX);
            expect_all(kInt, "(Int Int) Bool");
            return add(Node{it->second, kBool, 0, kids});
        }
        if (head == "=" || head == "distinct") {
            arity(2, SIZE_MAX);
            const int s = nodes[static_cast<std::size_t>(kids[0])].sort;
            const std::string n = sort_name(s);
            expect_all(s, "(" + n + " " + n + ") Bool");
            return add(Node{head == "=" ? Op::Eq : Op::Distinct, kBool, 0, kids});
        }
        if (head == "ite") {
            arity(3, 3);
            const auto& c = nodes[static_cast<std::size_t>(kids[0])];
            const int s = nodes[static_cast<std::size_t>(kids[1])].sort;
            if (c.sort != kBool) mismatch(0, "(Bool " + sort_name(s) + " " + sort_name(s) + ") " + sort_name(s), c.sort);
            if (nodes[static_cast<std::size_t>(kids[2])].sort != s) {
                mismatch(2, "(Bool " + sort_name(s) + " " + sort_name(s) + ") " + sort_name(s),
                         nodes[static_cast<std::size_t>(kids[2])].sort);
            }
            return add(Node{Op::Ite, s, 0, kids});
        }
        throw TypeError{e.line, e.column, "unknown function/constant " + unquote_symbol(head)};
    }

    int compile_let(const SExpr& e, const Scope& scope) {
        if (e.items.size() != 3 || !e.items[1].is_list()) throw TypeError{e.line, e.column, "invalid let"};
        Scope inner = scope;
        for (const auto& b : e.items[1].items) {
            if (!b.is_list() || b.items.size() != 2 || b.items[0].kind != SExpr::Kind::Symbol) {
                throw TypeError{b.line, b.column, "invalid let binding"};
            }
            inner[unquote_symbol(b.items[0].text)] = compile(b.items[1], scope);
        }
        return compile(e.items[2], inner);
    }
};

using Assignment = std::vector<std::optional<std::int64_t>>;

std::optional<std::int64_t> eval(const Problem& p, int id, const Assignment& a) {
    const Node& n = p.nodes[static_cast<std::size_t>(id)];
    auto kid = [&](std::size_t i) { return eval(p, n.kids[i], a); };
    switch (n.op) {
        case Op::Const:
            return n.value;
        case Op::Var:
            return a[static_cast<std::size_t>(n.value)];
        case Op::Not: {
            auto v = kid(0);
            if (!v) return std::nullopt;
            return *v ? 0 : 1;
        }
        case Op::And:
        case Op::Or: {
            const std::int64_t dominant = n.op == Op::And ? 0 : 1;
            bool unknown = false;
            for (std::size_t i = 0; i < n.kids.size(); ++i) {
                auto v = kid(i);
                if (!v) unknown = true;
                else if (*v == dominant) return dominant;
            }
            if (unknown) return std::nullopt;
            return 1 - dominant;
        }
        case Op::Implies: {
            // right-associative chain
            std::optional<std::int64_t> acc = kid(n.kids.size() - 1);
            for (std::size_t i = n.kids.size() - 1; i-- > 0;) {
                auto l = kid(i);
                if (l && *l == 0) acc = 1;
                else if (acc && *acc == 1) acc = 1;
                else if (l && acc) acc = 0;
                else acc = std::nullopt;
            }
            return acc;
        }
        case Op::Xor: {
            std::int64_t acc = 0;
            for (std::size_t i = 0; i < n.kids.size(); ++i) {
                auto v = kid(i);
                if (!v) return std::nullopt;
                acc ^= *v;
            }
            return acc;
        }
        case Op::Eq:
        case Op::Distinct: {
            std::vector<std::int64_t> vals;
            bool unknown = false;
            for (std::size_t i = 0; i < n.kids.size(); ++i) {
                auto v = kid(i);
                if (!v) unknown = true;
                else vals.push_back(*v);
            }
            if (n.op == Op::Eq) {
                for (std::size_t i = 1; i < vals.size(); ++i) {
                    if (vals[i] != vals[0]) return 0;
                }
                if (unknown) return std::nullopt;
                return 1;
            }
            std::set<std::int64_t> uniq(vals.begin(), vals.end());
            if (uniq.size() != vals.size()) return 0;
            if (unknown) return std::nullopt;
            return 1;
        }
        case Op::Ite: {
            auto c = kid(0);
            if (c) return *c ? kid(1) : kid(2);
            auto t = kid(1);
            auto f = kid(2);
            if (t && f && *t == *f) return t;
            return std::nullopt;
        }
        default:
            break;
    }
    std::vector<std::int64_t> v;
    for (std::size_t i = 0; i < n.kids.size(); ++i) {
        auto x = kid(i);
        if (!x) return std::nullopt;
        v.push_back(*x);
    }
    std::int64_t r = 0;
    switch (n.op) {
        case Op::Add:
            r = 0;
            for (auto x : v) {
                if (__builtin_add_overflow(r, x, &r)) return std::nullopt;
            }
            return r;
        case Op::Mul:
            r = 1;
            for (auto x : v) {
                if (__builtin_mul_overflow(r, x, &r)) return std::nullopt;
            }
            return r;
        case Op::Sub:
            r = v[0];
            for (std::size_t i = 1; i < v.size(); ++i) {
                if (__builtin_sub_overflow(r, v[i], &r)) return std::nullopt;
            }
            return r;
        case Op::Neg:
            return -v[0];
        case Op::Abs:
            return v[0] < 0 ? -v[0] : v[0];
        case Op::Div:
        case Op::Mod: {
            if (v[1] == 0) return std::nullopt;
            // SMT-LIB euclidean division
            std::int64_t q = v[0] / v[1];
            std::int64_t m = v[0] % v[1];
            if (m < 0) {
                m += v[1] < 0 ? -v[1] : v[1];
                q = (v[0] - m) / v[1];
            }
            return n.op == Op::Div ? q : m;
        }
        case Op::Lt:
        case Op::Le:
        case Op::Gt:
        case Op::Ge:
            for (std::size_t i = 0; i + 1 < v.size(); ++i) {
                const bool ok = n.op == Op::Lt   ? v[i] < v[i + 1]
                                : n.op == Op::Le ? v[i] <= v[i + 1]
                                : n.op == Op::Gt ? v[i] > v[i + 1]
                                                 : v[i] >= v[i + 1];
                if (!ok) return 0;
            }
            return 1;
        default:
            return std::nullopt;
    }
}

bool is_int_literal(const Problem& p, int id) {
    const Node& n = p.nodes[static_cast<std::size_t>(id)];
    if (n.op == Op::Const && n.sort == kInt) return true;
    return n.op == Op::Neg && is_int_literal(p, n.kids[0]);
}

class Search {
public:
    Search(const Problem& p, BuiltinLimits limits) : p_(p), limits_(limits) {}

    SatResult run() {
        // Variable order: first occurrence in the assertions.
        std::vector<bool> seen(p_.vars.size(), false);
        for (int a : p_.assertions) collect(a, seen);
        for (std::size_t v = 0; v < p_.vars.size(); ++v) {
            if (!seen[v]) order_.push_back(v);  // unconstrained, assigned last
        }
        complete_ = true;
        std::set<std::int64_t> cands{0};
        for (const Node& n : p_.nodes) {
            if (n.op == Op::Const && n.sort == kInt) {
                for (std::int64_t d : {-1, 0, 1}) {
                    cands.insert(n.value + d);
                    cands.insert(-n.value + d);
                }
            }
        }
        int_candidates_.assign(cands.begin(), cands.end());
        for (int a : p_.assertions) check_complete(a, -1);
        Assignment a(p_.vars.size());
        const int r = descend(0, a);
        if (r == 1) return SatResult::SAT;
        if (r == 0 && complete_) return SatResult::UNSAT;
        return SatResult::UNKNOWN;
    }

private:
    void collect(int id, std::vector<bool>& seen) {
        const Node& n = p_.nodes[static_cast<std::size_t>(id)];
        if (n.op == Op::Var && !seen[static_cast<std::size_t>(n.value)]) {
            seen[static_cast<std::size_t>(n.value)] = true;
            order_.push_back(static_cast<std::size_t>(n.value));
        }
        for (int k : n.kids) collect(k, seen);
    }

    // Integer variables must only be compared directly against literals.
    void check_complete(int id, int parent) {
        const Node& n = p_.nodes[static_cast<std::size_t>(id)];
        if (n.op == Op::Var && n.sort == kInt) {
            bool ok = false;
            if (parent >= 0) {
                const Node& par = p_.nodes[static_cast<std::size_t>(parent)];
                const bool cmp = par.op == Op::Eq || par.op == Op::Distinct || par.op == Op::Lt || par.op == Op::Le ||
                                 par.op == Op::Gt || par.op == Op::Ge;
                if (cmp && par.kids.size() == 2) {
                    const int other = par.kids[0] == id ? par.kids[1] : par.kids[0];
                    ok = is_int_literal(p_, other);
                }
            }
            if (!ok) complete_ = false;
        }
        for (int k : n.kids) check_complete(k, id);
    }

    // 1 = model found, 0 = exhausted, -1 = gave up
    int descend(std::size_t depth, Assignment& a) {
        if (++visited_ > limits_.max_nodes) return -1;
        bool all_true = true;
        for (int as : p_.assertions) {
            auto v = eval(p_, as, a);
            if (v && *v == 0) return 0;
            if (!v) all_true = false;
        }
        if (all_true) return 1;
        if (depth == order_.size()) {
            complete_ = false;  // arithmetic could not be decided
            return 0;
        }
        const std::size_t var = order_[depth];
        const int sort = p_.vars[var].sort;
        std::vector<std::int64_t> domain;
        if (sort == kBool) {
            domain = {0, 1};
        } else if (sort == kInt) {
            domain = int_candidates_;
        } else {
            // Uninterpreted: symmetry-reduced, a fresh element or one already in use.
            std::int64_t max_used = -1;
            for (std::size_t d = 0; d < depth; ++d) {
                const std::size_t w = order_[d];
                if (p_.vars[w].sort == sort && a[w]) max_used = std::max(max_used, *a[w]);
            }
            for (std::int64_t v = 0; v <= max_used + 1; ++v) domain.push_back(v);
        }
        bool gave_up = false;
        for (auto value : domain) {
            a[var] = value;
            const int r = descend(depth + 1, a);
            if (r == 1) return 1;
            if (r == -1) gave_up = true;
            if (gave_up && visited_ > limits_.max_nodes) break;
        }
        a[var] = std::nullopt;
        return gave_up ? -1 : 0;
    }

    const Problem& p_;
    BuiltinLimits limits_;
    std::vector<std::size_t> order_;
    std::vector<std::int64_t> int_candidates_;
    bool complete_ = true;
    std::size_t visited_ = 0;
};

std::string error_line(int line, int column, const std::string& what) {
    return "(error \"line " + std::to_string(line) + " column " + std::to_string(column) + ": " + what + "\")\n";
}

}  // namespace

std::string run_builtin_solver(const std::string& script, BuiltinLimits limits) {
    std::vector<SExpr> commands;
    try {
        commands = parse_sexprs(script);
    } catch (const Error& e) {
        std::string msg = e.what();
        const auto pos = msg.find("line ");
        return "(error \"" + (pos == std::string::npos ? msg : msg.substr(pos)) + "\")\n";
    }
    Problem p;
    std::ostringstream out;
    for (const SExpr& cmd : commands) {
        const std::string head = cmd.head();
        try {
            if (head.empty()) throw TypeError{cmd.line, cmd.column, "invalid command, '(' expected"};
            if (head == "set-logic" || head == "set-option" || head == "set-info" || head == "get-info") continue;
            if (head == "exit") break;
            if (head == "declare-sort") {
                if (cmd.items.size() < 2 || cmd.items[1].kind != SExpr::Kind::Symbol) {
                    throw TypeError{cmd.line, cmd.column, "invalid sort declaration"};
                }
                if (cmd.items.size() == 3 && cmd.items[2].text != "0") {
                    throw TypeError{cmd.line, cmd.column, "parametric sorts are not supported"};
                }
                const std::string name = unquote_symbol(cmd.items[1].text);
                if (p.sorts.contains(name)) {
                    throw TypeError{cmd.line, cmd.column, "invalid declaration, sort '" + name + "' already declared"};
                }
                p.sorts[name] = static_cast<int>(p.sort_names.size());
                p.sort_names.push_back(name);
                continue;
            }
            if (head == "declare-const" || head == "declare-fun") {
                const bool fun = head == "declare-fun";
                if (cmd.items.size() != (fun ? 4u : 3u) || cmd.items[1].kind != SExpr::Kind::Symbol) {
                    throw TypeError{cmd.line, cmd.column, "invalid " + head + " command"};
                }
                if (fun && !(cmd.items[2].is_list() && cmd.items[2].items.empty())) {
                    throw TypeError{cmd.items[2].line, cmd.items[2].column,
                                    "functions with arguments are not supported"};
                }
                const std::string name = unquote_symbol(cmd.items[1].text);
                const int sort = p.resolve_sort(cmd.items.back());
                if (p.consts.contains(name)) {
                    throw TypeError{cmd.line, cmd.column,
                                    "invalid declaration, constant '" + name +
                                        "' (with the given signature) already declared"};
                }
                p.consts[name] = static_cast<int>(p.vars.size());
                p.vars.push_back(VarInfo{name, sort});
                continue;
            }
            if (head == "assert") {
                if (cmd.items.size() != 2) throw TypeError{cmd.line, cmd.column, "invalid assert command"};
                const int t = p.compile(cmd.items[1], {});
                if (p.nodes[static_cast<std::size_t>(t)].sort != kBool) {
                    throw TypeError{cmd.items[1].line, cmd.items[1].column,
                                    "invalid assert command, term is not Boolean"};
                }
                p.assertions.push_back(t);
                continue;
            }
            if (head == "check-sat") {
                out << to_string(Search(p, limits).run()) << '\n';
                continue;
            }
            if (head == "get-model" || head == "get-value") {
                throw TypeError{cmd.line, cmd.column, "model is not available"};
            }
            throw TypeError{cmd.line, cmd.column, "unsupported command " + head};
        } catch (const TypeError& e) {
            out << error_line(e.line, e.column, e.what);
        }
    }
    return out.str();
}

SolverReply BuiltinSolver::run(const std::string& script) {
    SolverReply r;
    r.output = run_builtin_solver(script, limits_);
    return r;
}

}  // namespace pfa
