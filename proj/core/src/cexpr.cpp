// SPDX-License-Identifier: Apache-2.0
#include "pfa/cexpr.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "pfa/error.hpp"

namespace pfa {

namespace {

constexpr int kPrecComma = 1;
constexpr int kPrecAssign = 2;
constexpr int kPrecTernary = 3;
constexpr int kPrecUnary = 14;
constexpr int kPrecPostfix = 15;

int binary_precedence(std::string_view op) {
    static const std::unordered_map<std::string_view, int> kTable = {
        {",", kPrecComma}, {"=", kPrecAssign}, {"+=", kPrecAssign}, {"-=", kPrecAssign},
        {"*=", kPrecAssign}, {"/=", kPrecAssign}, {"%=", kPrecAssign}, {"&=", kPrecAssign},
        {"|=", kPrecAssign}, {"^=", kPrecAssign}, {"<<=", kPrecAssign}, {">>=", kPrecAssign},
        {"||", 4}, {"&&", 5}, {"|", 6}, {"^", 7}, {"&", 8}, {"==", 9}, {"!=", 9},
        {"<", 10}, {">", 10}, {"<=", 10}, {">=", 10}, {"<<", 11}, {">>", 11},
        {"+", 12}, {"-", 12}, {"*", 13}, {"/", 13}, {"%", 13},
    };
    auto it = kTable.find(op);
    return it == kTable.end() ? -1 : it->second;
}

bool is_type_word(const Token& t) {
    static const std::unordered_set<std::string_view> kTypeWords = {
        "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned", "const",
        "volatile", "struct", "union", "enum", "_Bool", "bool", "size_t", "ssize_t", "uintptr_t",
    };
    if (!t.is_ident()) return false;
    if (kTypeWords.contains(t.text)) return true;
    const auto& s = t.text;
    return s.size() > 2 && s.ends_with("_t");
}

class Parser {
public:
    Parser(const std::vector<Token>& toks, std::size_t begin, std::size_t end)
        : toks_(toks), pos_(begin), end_(end) {}

    ExprPtr parse_all() {
        if (pos_ >= end_) fail("empty expression");
        ExprPtr e = parse(kPrecComma);
        if (pos_ != end_) fail("unexpected token '" + toks_[pos_].text + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        const int line = pos_ < toks_.size() ? toks_[pos_].line : (toks_.empty() ? 0 : toks_.back().line);
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + msg);
    }

    const Token* peek(std::size_t ahead = 0) const {
        return pos_ + ahead < end_ ? &toks_[pos_ + ahead] : nullptr;
    }
    bool at(std::string_view s) const {
        const Token* t = peek();
        return t != nullptr && t->kind == TokenKind::Punct && t->text == s;
    }
    void expect(std::string_view s) {
        if (!at(s)) fail("expected '" + std::string(s) + "'");
        ++pos_;
    }

    static ExprPtr node(ExprKind k, std::string op, std::vector<ExprPtr> kids = {}, bool arrow = false) {
        return std::make_shared<const Expr>(Expr{k, std::move(op), std::move(kids), arrow});
    }

    // Parenthesized type name starting at pos_ (which points at '(').
    bool looks_like_cast() const {
        std::size_t k = pos_ + 1;
        bool saw_type = false;
        bool saw_star = false;
        while (k < end_ && !(toks_[k].kind == TokenKind::Punct && toks_[k].text == ")")) {
            const Token& t = toks_[k];
            if (is_type_word(t)) {
                saw_type = true;
            } else if (t.kind == TokenKind::Punct && t.text == "*") {
                saw_star = true;
            } else if (!t.is_ident()) {
                return false;
            }
            ++k;
        }
        if (k >= end_ || k + 1 >= end_) return false;
        const Token& next = toks_[k + 1];
        const bool operand_follows = next.kind != TokenKind::Punct || next.text == "(" || next.text == "!" ||
                                     next.text == "~" || next.text == "-" || next.text == "&" || next.text == "*";
        return operand_follows && (saw_type || saw_star);
    }

    ExprPtr parse_prefix() {
        const Token* t = peek();
        if (t == nullptr) fail("unexpected end of expression");
        if (t->kind == TokenKind::Punct) {
            const std::string& s = t->text;
            if (s == "(") {
                if (looks_like_cast()) {
                    std::size_t close = pos_ + 1;
                    while (toks_[close].text != ")") ++close;
                    std::string type = join_tokens(toks_, pos_ + 1, close);
                    pos_ = close + 1;
                    return node(ExprKind::Cast, std::move(type), {parse(kPrecUnary)});
                }
                ++pos_;
                ExprPtr inner = parse(kPrecComma);
                expect(")");
                return inner;
            }
            if (s == "!" || s == "~" || s == "-" || s == "+" || s == "*" || s == "&" || s == "++" || s == "--") {
                ++pos_;
                return node(ExprKind::Unary, s, {parse(kPrecUnary)});
            }
            fail("unexpected token '" + s + "'");
        }
        ++pos_;
        switch (t->kind) {
            case TokenKind::Number: return node(ExprKind::Number, t->text);
            case TokenKind::Char: return node(ExprKind::Char, t->text);
            case TokenKind::String: {
                std::string s = t->text;
                while (peek() != nullptr && peek()->kind == TokenKind::String) s += " " + toks_[pos_++].text;
                return node(ExprKind::String, std::move(s));
            }
            case TokenKind::Identifier:
                if (t->text == "sizeof") {
                    if (at("(")) {
                        std::size_t depth = 0;
                        std::size_t k = pos_;
                        for (; k < end_; ++k) {
                            if (toks_[k].text == "(") ++depth;
                            if (toks_[k].text == ")" && --depth == 0) break;
                        }
                        if (k >= end_) fail("unbalanced sizeof");
                        std::string inner = join_tokens(toks_, pos_ + 1, k);
                        pos_ = k + 1;
                        return node(ExprKind::Sizeof, std::move(inner));
                    }
                    return node(ExprKind::Sizeof, print_expr(*parse(kPrecUnary)));
                }
                return node(ExprKind::Identifier, t->text);
            default: fail("unexpected token");
        }
    }

    ExprPtr parse(int min_prec) {
        ExprPtr lhs = parse_prefix();
        for (;;) {
            const Token* t = peek();
            if (t == nullptr || t->kind != TokenKind::Punct) break;
            const std::string& s = t->text;
            if (s == "(" ) {
                ++pos_;
                std::vector<ExprPtr> kids{lhs};
                if (!at(")")) {
                    for (;;) {
                        kids.push_back(parse(kPrecAssign));
                        if (at(",")) {
                            ++pos_;
                            continue;
                        }
                        break;
                    }
                }
                expect(")");
                lhs = node(ExprKind::Call, "", std::move(kids));
                continue;
            }
            if (s == "[") {
                ++pos_;
                ExprPtr idx = parse(kPrecComma);
                expect("]");
                lhs = node(ExprKind::Index, "", {lhs, idx});
                continue;
            }
            if (s == "->" || s == ".") {
                ++pos_;
                const Token* name = peek();
                if (name == nullptr || !name->is_ident()) fail("expected member name");
                ++pos_;
                lhs = node(ExprKind::Member, name->text, {lhs}, s == "->");
                continue;
            }
            if (s == "++" || s == "--") {
                ++pos_;
                lhs = node(ExprKind::Postfix, s, {lhs});
                continue;
            }
            if (s == "?") {
                if (kPrecTernary < min_prec) break;
                ++pos_;
                ExprPtr mid = parse(kPrecComma);
                expect(":");
                ExprPtr rhs = parse(kPrecTernary);
                lhs = node(ExprKind::Ternary, "?", {lhs, mid, rhs});
                continue;
            }
            const int prec = binary_precedence(s);
            if (prec < 0 || prec < min_prec) break;
            ++pos_;
            const bool right_assoc = prec == kPrecAssign;
            ExprPtr rhs = parse(right_assoc ? prec : prec + 1);
            lhs = node(ExprKind::Binary, s, {lhs, rhs});
        }
        return lhs;
    }

    const std::vector<Token>& toks_;
    std::size_t pos_;
    std::size_t end_;
};

int precedence_of(const Expr& e) {
    switch (e.kind) {
        case ExprKind::Binary: return binary_precedence(e.op);
        case ExprKind::Ternary: return kPrecTernary;
        case ExprKind::Unary:
        case ExprKind::Cast: return kPrecUnary;
        case ExprKind::Postfix:
        case ExprKind::Call:
        case ExprKind::Member:
        case ExprKind::Index: return kPrecPostfix;
        default: return kPrecPostfix + 1;
    }
}

std::string wrap(const Expr& e, int needed) {
    std::string s = print_expr(e);
    return precedence_of(e) < needed ? "(" + s + ")" : s;
}

void collect_paths(const Expr& e, std::vector<std::string>& out) {
    if (is_access_path(e)) {
        std::string s = print_expr(e);
        if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
        return;
    }
    switch (e.kind) {
        case ExprKind::Call:
            for (std::size_t i = 1; i < e.kids.size(); ++i) collect_paths(*e.kids[i], out);
            if (e.kids[0]->kind != ExprKind::Identifier) collect_paths(*e.kids[0], out);
            return;
        case ExprKind::Member:
            // Member of a non-path base, e.g. f(x)->y: the base may still hold paths.
            collect_paths(*e.kids[0], out);
            return;
        default:
            for (const auto& k : e.kids) collect_paths(*k, out);
    }
}

void collect_calls(const Expr& e, std::vector<CallInfo>& out) {
    for (const auto& k : e.kids) collect_calls(*k, out);
    if (e.kind == ExprKind::Call && e.kids[0]->kind == ExprKind::Identifier) {
        CallInfo info;
        info.callee = e.kids[0]->op;
        for (std::size_t i = 1; i < e.kids.size(); ++i) info.args.push_back(print_expr(*e.kids[i]));
        info.text = print_expr(e);
        auto same = [&](const CallInfo& c) { return c.text == info.text; };
        if (std::none_of(out.begin(), out.end(), same)) out.push_back(std::move(info));
    }
}

}  // namespace

ExprPtr parse_c_expr(const std::vector<Token>& tokens, std::size_t begin, std::size_t end) {
    Parser p(tokens, begin, end);
    return p.parse_all();
}

ExprPtr parse_c_expr(std::string_view text) {
    auto toks = lex_c(text);
    return parse_c_expr(toks, 0, toks.size());
}

std::string print_expr(const Expr& e) {
    switch (e.kind) {
        case ExprKind::Identifier:
        case ExprKind::Number:
        case ExprKind::String:
        case ExprKind::Char: return e.op;
        case ExprKind::Unary: return e.op + wrap(*e.kids[0], kPrecUnary);
        case ExprKind::Postfix: return wrap(*e.kids[0], kPrecPostfix) + e.op;
        case ExprKind::Cast: return "(" + e.op + ")" + wrap(*e.kids[0], kPrecUnary);
        case ExprKind::Sizeof: return "sizeof(" + e.op + ")";
        case ExprKind::Member: return wrap(*e.kids[0], kPrecPostfix) + (e.arrow ? "->" : ".") + e.op;
        case ExprKind::Index: return wrap(*e.kids[0], kPrecPostfix) + "[" + print_expr(*e.kids[1]) + "]";
        case ExprKind::Call: {
            std::string s = wrap(*e.kids[0], kPrecPostfix) + "(";
            for (std::size_t i = 1; i < e.kids.size(); ++i) {
                if (i > 1) s += ", ";
                s += wrap(*e.kids[i], kPrecAssign);
            }
            return s + ")";
        }
        case ExprKind::Ternary:
            return wrap(*e.kids[0], kPrecTernary + 1) + " ? " + print_expr(*e.kids[1]) + " : " +
                   wrap(*e.kids[2], kPrecTernary);
        case ExprKind::Binary: {
            const int p = binary_precedence(e.op);
            const bool right_assoc = p == kPrecAssign;
            const std::string sep = e.op == "," ? ", " : " " + e.op + " ";
            return wrap(*e.kids[0], right_assoc ? p + 1 : p) + sep + wrap(*e.kids[1], right_assoc ? p : p + 1);
        }
    }
    return {};
}

std::string normalize_condition(std::string_view text) {
    try {
        return print_expr(*parse_c_expr(text));
    } catch (const Error&) {
        std::string out;
        bool space = false;
        for (char c : text) {
            if (std::isspace(static_cast<unsigned char>(c))) {
                space = !out.empty();
                continue;
            }
            if (space) out.push_back(' ');
            space = false;
            out.push_back(c);
        }
        return out;
    }
}

bool is_access_path(const Expr& e) {
    if (e.kind == ExprKind::Identifier) {
        return !is_c_keyword(e.op) && e.op != "NULL" && e.op != "true" && e.op != "false" && e.op != "nullptr";
    }
    if (e.kind == ExprKind::Member) return is_access_path(*e.kids[0]);
    return false;
}

std::vector<std::string> access_paths(const Expr& e) {
    std::vector<std::string> out;
    collect_paths(e, out);
    return out;
}

std::vector<CallInfo> calls_in(const Expr& e) {
    std::vector<CallInfo> out;
    collect_calls(e, out);
    return out;
}

std::optional<CallInfo> call_on_line(std::string_view line, const std::string& callee) {
    const auto toks = lex_c(line);
    for (std::size_t k = 0; k + 1 < toks.size(); ++k) {
        if (!(toks[k].is_ident() && toks[k].text == callee && toks[k + 1].is("("))) continue;
        CallInfo out{callee, {}, {}};
        int depth = 0;
        std::size_t start = k + 2;
        for (std::size_t m = k + 1; m < toks.size(); ++m) {
            if (toks[m].is("(") || toks[m].is("[")) ++depth;
            if (toks[m].is(")") || toks[m].is("]")) --depth;
            if ((depth == 1 && toks[m].is(",")) || depth == 0) {
                if (m > start) out.args.push_back(normalize_condition(join_tokens(toks, start, m)));
                start = m + 1;
                if (depth == 0) {
                    out.text = normalize_condition(join_tokens(toks, k, m + 1));
                    return out;
                }
            }
        }
        return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace pfa
