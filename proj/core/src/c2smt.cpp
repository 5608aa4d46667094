// SPDX-License-Identifier: Apache-2.0
#include "pfa/c2smt.hpp"

#include <algorithm>
#include <cctype>

#include "pfa/error.hpp"
#include "pfa/sexpr.hpp"

namespace pfa {

std::string to_string(SmtSort s) {
    switch (s) {
        case SmtSort::Bool: return "Bool";
        case SmtSort::Int: return "Int";
        case SmtSort::Ptr: return "Ptr";
    }
    return "Bool";
}

std::optional<SmtSort> smt_sort_from_string(const std::string& s) {
    if (s == "Bool") return SmtSort::Bool;
    if (s == "Int") return SmtSort::Int;
    if (s == "Ptr") return SmtSort::Ptr;
    return std::nullopt;
}

std::string atom_symbol(const std::string& c_text) { return quote_symbol(c_text); }

namespace {

bool is_constant_name(const std::string& s) {
    if (s.empty() || !std::isupper(static_cast<unsigned char>(s[0]))) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isupper(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_';
    });
}

bool is_null(const Expr& e) {
    if (e.kind == ExprKind::Identifier) return e.op == "NULL" || e.op == "nullptr";
    if (e.kind == ExprKind::Cast) return is_null(*e.kids[0]);
    return false;
}

bool is_bool_literal(const Expr& e) {
    return e.kind == ExprKind::Identifier && (e.op == "true" || e.op == "false");
}

bool is_passthrough_call(const Expr& e) {
    if (e.kind != ExprKind::Call || e.kids.size() < 2 || e.kids[0]->kind != ExprKind::Identifier) return false;
    const std::string& f = e.kids[0]->op;
    return f == "likely" || f == "unlikely" || f == "__builtin_expect";
}

std::optional<long long> int_literal(const Expr& e) {
    if (e.kind == ExprKind::Char) {
        const std::string& t = e.op;
        if (t.size() == 3) return static_cast<unsigned char>(t[1]);
        if (t.size() == 4 && t[1] == '\\') {
            switch (t[2]) {
                case '0': return 0;
                case 'n': return '\n';
                case 't': return '\t';
                case 'r': return '\r';
                case '\\': return '\\';
                case '\'': return '\'';
                default: return std::nullopt;
            }
        }
        return std::nullopt;
    }
    if (e.kind != ExprKind::Number) return std::nullopt;
    std::string t = e.op;
    while (!t.empty() && (t.back() == 'u' || t.back() == 'U' || t.back() == 'l' || t.back() == 'L')) t.pop_back();
    if (t.find_first_of(".eEpP") != std::string::npos && t.rfind("0x", 0) != 0 && t.rfind("0X", 0) != 0) {
        return std::nullopt;
    }
    try {
        std::size_t used = 0;
        long long v = 0;
        if (t.size() > 1 && t[0] == '0' && (t[1] == 'b' || t[1] == 'B')) {
            v = std::stoll(t.substr(2), &used, 2);
            used += 2;
        } else {
            v = std::stoll(t, &used, 0);
        }
        if (used != t.size()) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::string int_term(long long v) { return v < 0 ? "(- " + std::to_string(-v) + ")" : std::to_string(v); }

enum class LeafKind { None, Variable, Call };

LeafKind leaf_kind(const Expr& e) {
    if (is_access_path(e) || e.kind == ExprKind::Index) return LeafKind::Variable;
    if (e.kind == ExprKind::Unary && e.op == "*") return LeafKind::Variable;
    if (e.kind == ExprKind::Call && e.kids[0]->kind == ExprKind::Identifier && !is_passthrough_call(e)) {
        return LeafKind::Call;
    }
    return LeafKind::None;
}

// Operators encoded structurally; everything else becomes an opaque atom.
bool is_structural(const Expr& e) {
    switch (e.kind) {
        case ExprKind::Number:
        case ExprKind::Char:
            return int_literal(e).has_value();
        case ExprKind::Identifier:
            return true;
        case ExprKind::Unary:
            return e.op == "!" || e.op == "-" || e.op == "+";
        case ExprKind::Binary: {
            static const char* ops[] = {"&&", "||", "==", "!=", "<", "<=", ">", ">=", "+", "-", "*", ","};
            return std::any_of(std::begin(ops), std::end(ops), [&](const char* o) { return e.op == o; });
        }
        case ExprKind::Ternary:
        case ExprKind::Cast:
            return true;
        case ExprKind::Call:
            return is_passthrough_call(e);
        default:
            return false;
    }
}

void collect_atoms(const Expr& e, std::vector<Atom>& out) {
    auto push = [&](Atom a) {
        if (std::none_of(out.begin(), out.end(), [&](const Atom& b) { return b.text == a.text; })) {
            out.push_back(std::move(a));
        }
    };
    if (e.kind == ExprKind::Identifier) {
        if (is_null(e) || is_bool_literal(e)) return;
        push(Atom{e.op, is_constant_name(e.op) ? AtomKind::Constant : AtomKind::Variable, std::nullopt});
        return;
    }
    switch (leaf_kind(e)) {
        case LeafKind::Variable:
            push(Atom{print_expr(e), AtomKind::Variable, std::nullopt});
            return;
        case LeafKind::Call: {
            auto calls = calls_in(e);
            push(Atom{print_expr(e), AtomKind::Call, calls.back()});
            return;
        }
        case LeafKind::None:
            break;
    }
    if (!is_structural(e)) {
        push(Atom{print_expr(e), AtomKind::Opaque, std::nullopt});
        return;
    }
    if (e.kind == ExprKind::Binary && e.op == ",") {
        collect_atoms(*e.kids[1], out);
        return;
    }
    if (is_passthrough_call(e)) {
        collect_atoms(*e.kids[1], out);
        return;
    }
    for (const auto& k : e.kids) collect_atoms(*k, out);
}

// (not (not x)) collapses to x.
std::string negate(const std::string& t) {
    if (t.rfind("(not ", 0) == 0 && t.back() == ')') {
        // only when the (not ...) spans the whole term
        int depth = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i] == '(') ++depth;
            if (t[i] == ')' && --depth == 0) {
                if (i + 1 == t.size()) return t.substr(5, t.size() - 6);
                break;
            }
        }
    }
    return "(not " + t + ")";
}

struct Term {
    std::string text;
    SmtSort sort;
};

class Translator {
public:
    explicit Translator(const SortMap& hints) : hints_(hints) {}

    std::string condition(const Expr& e) { return build(e, SmtSort::Bool).text; }
    SortMap symbols;

private:
    std::optional<SmtSort> known(const std::string& name) const {
        if (auto it = symbols.find(name); it != symbols.end()) return it->second;
        if (auto it = hints_.find(name); it != hints_.end()) return it->second;
        return std::nullopt;
    }

    Term leaf(const std::string& name, std::optional<SmtSort> want, SmtSort fallback) {
        SmtSort s = known(name).value_or(want.value_or(fallback));
        symbols.emplace(name, s);
        s = symbols.at(name);
        Term t{atom_symbol(name), s};
        return want ? coerce(t, *want, name) : t;
    }

    Term opaque(const Expr& e, std::optional<SmtSort> want) {
        return leaf(print_expr(e), want, SmtSort::Int);
    }

    Term coerce(Term t, SmtSort to, const std::string& origin) {
        if (t.sort == to) return t;
        if (to == SmtSort::Bool) {
            if (t.sort == SmtSort::Int) return {"(not (= " + t.text + " 0))", SmtSort::Bool};
            return {"(not (= " + t.text + " null))", SmtSort::Bool};
        }
        if (to == SmtSort::Int && t.sort == SmtSort::Bool) return {"(ite " + t.text + " 1 0)", SmtSort::Int};
        if (to == SmtSort::Ptr && t.text == "0") return {"null", SmtSort::Ptr};
        // No faithful encoding: a fresh symbol of the wanted sort.
        const std::string name = origin + "@" + to_string(to);
        symbols.emplace(name, to);
        return {atom_symbol(name), to};
    }

    std::optional<SmtSort> guess(const Expr& e) const {
        if (is_null(e)) return SmtSort::Ptr;
        if (is_bool_literal(e)) return SmtSort::Bool;
        if (int_literal(e)) return SmtSort::Int;
        if (e.kind == ExprKind::Cast) return guess(*e.kids[0]);
        if (is_passthrough_call(e)) return guess(*e.kids[1]);
        if (e.kind == ExprKind::Identifier && is_constant_name(e.op)) return known(e.op).value_or(SmtSort::Int);
        if (leaf_kind(e) != LeafKind::None) return known(print_expr(e));
        if (!is_structural(e)) return known(print_expr(e)).value_or(SmtSort::Int);
        if (e.kind == ExprKind::Unary) return e.op == "!" ? SmtSort::Bool : SmtSort::Int;
        if (e.kind == ExprKind::Binary) {
            if (e.op == ",") return guess(*e.kids[1]);
            if (e.op == "+" || e.op == "-" || e.op == "*") return SmtSort::Int;
            return SmtSort::Bool;
        }
        if (e.kind == ExprKind::Ternary) {
            auto a = guess(*e.kids[1]);
            return a ? a : guess(*e.kids[2]);
        }
        return std::nullopt;
    }

    Term build(const Expr& e, std::optional<SmtSort> want) {
        auto as = [&](Term t) { return want ? coerce(std::move(t), *want, print_expr(e)) : t; };
        if (is_null(e)) return as({"null", SmtSort::Ptr});
        if (is_bool_literal(e)) return as({e.op, SmtSort::Bool});
        if (auto v = int_literal(e)) {
            if (want == SmtSort::Ptr && *v == 0) return {"null", SmtSort::Ptr};
            return as({int_term(*v), SmtSort::Int});
        }
        if (e.kind == ExprKind::Identifier) {
            return leaf(e.op, want, is_constant_name(e.op) ? SmtSort::Int : SmtSort::Bool);
        }
        if (leaf_kind(e) != LeafKind::None) return leaf(print_expr(e), want, SmtSort::Bool);
        if (!is_structural(e)) return opaque(e, want);
        if (e.kind == ExprKind::Cast) return build(*e.kids[0], want);
        if (is_passthrough_call(e)) return build(*e.kids[1], want);
        if (e.kind == ExprKind::Unary) {
            if (e.op == "!") return as({negate(build(*e.kids[0], SmtSort::Bool).text), SmtSort::Bool});
            const Term k = build(*e.kids[0], SmtSort::Int);
            return as({e.op == "-" ? "(- " + k.text + ")" : k.text, SmtSort::Int});
        }
        if (e.kind == ExprKind::Ternary) {
            std::optional<SmtSort> s = want ? want : guess(e);
            const SmtSort branch = s.value_or(SmtSort::Int);
            const Term c = build(*e.kids[0], SmtSort::Bool);
            const Term a = build(*e.kids[1], branch);
            const Term b = build(*e.kids[2], branch);
            return as({"(ite " + c.text + " " + a.text + " " + b.text + ")", branch});
        }
        const std::string& op = e.op;
        if (op == ",") return build(*e.kids[1], want);
        if (op == "&&" || op == "||") {
            std::vector<std::string> parts;
            flatten(e, op, parts);
            std::string s = op == "&&" ? "(and" : "(or";
            for (const auto& p : parts) s += " " + p;
            return as({s + ")", SmtSort::Bool});
        }
        if (op == "==" || op == "!=") {
            const auto ga = guess(*e.kids[0]);
            const auto gb = guess(*e.kids[1]);
            SmtSort s = SmtSort::Int;
            if (ga == SmtSort::Ptr || gb == SmtSort::Ptr) s = SmtSort::Ptr;
            else if ((ga == SmtSort::Bool && gb != SmtSort::Int) || (gb == SmtSort::Bool && ga != SmtSort::Int)) s = SmtSort::Bool;
            const Term a = build(*e.kids[0], s);
            const Term b = build(*e.kids[1], s);
            const std::string eq = "(= " + a.text + " " + b.text + ")";
            return as({op == "==" ? eq : "(not " + eq + ")", SmtSort::Bool});
        }
        const Term a = build(*e.kids[0], SmtSort::Int);
        const Term b = build(*e.kids[1], SmtSort::Int);
        if (op == "+" || op == "-" || op == "*") return as({"(" + op + " " + a.text + " " + b.text + ")", SmtSort::Int});
        return as({"(" + op + " " + a.text + " " + b.text + ")", SmtSort::Bool});
    }

    void flatten(const Expr& e, const std::string& op, std::vector<std::string>& parts) {
        if (e.kind == ExprKind::Binary && e.op == op) {
            flatten(*e.kids[0], op, parts);
            flatten(*e.kids[1], op, parts);
            return;
        }
        parts.push_back(build(e, SmtSort::Bool).text);
    }

    const SortMap& hints_;
};

}  // namespace

std::vector<Atom> condition_atoms(const std::string& c_text) {
    std::vector<Atom> out;
    try {
        collect_atoms(*parse_c_expr(c_text), out);
    } catch (const Error&) {
        out.push_back(Atom{normalize_condition(c_text), AtomKind::Opaque, std::nullopt});
    }
    return out;
}

CTranslation translate_condition(const std::string& c_text, const SortMap& hints) {
    Translator t(hints);
    CTranslation out;
    try {
        out.term = t.condition(*parse_c_expr(c_text));
    } catch (const Error&) {
        const std::string name = normalize_condition(c_text);
        t.symbols.emplace(name, SmtSort::Bool);
        out.term = atom_symbol(name);
        if (t.symbols.at(name) == SmtSort::Int) out.term = "(not (= " + out.term + " 0))";
        if (t.symbols.at(name) == SmtSort::Ptr) out.term = "(not (= " + out.term + " null))";
    }
    out.symbols = std::move(t.symbols);
    return out;
}

}  // namespace pfa
