// SPDX-License-Identifier: Apache-2.0
#include "pfa/sexpr.hpp"

#include <cctype>
#include <set>

#include "pfa/error.hpp"

namespace pfa {

std::string SExpr::head() const {
    if (kind != Kind::List || items.empty() || items[0].kind != Kind::Symbol) return {};
    return items[0].text;
}

namespace {

class Reader {
public:
    explicit Reader(std::string_view t) : text_(t) {}

    std::vector<SExpr> all() {
        std::vector<SExpr> out;
        skip();
        while (pos_ < text_.size()) {
            out.push_back(one());
            skip();
        }
        return out;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw Error(ErrorCode::SolverError,
                    "line " + std::to_string(line_) + " column " + std::to_string(col_) + ": " + what);
    }

    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (c == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    SExpr one() {
        SExpr e;
        e.line = line_;
        e.column = col_;
        const char c = text_[pos_];
        if (c == '(') {
            advance();
            skip();
            while (pos_ < text_.size() && text_[pos_] != ')') {
                e.items.push_back(one());
                skip();
            }
            if (pos_ >= text_.size()) fail("unexpected end of file, missing ')'");
            advance();
            return e;
        }
        if (c == ')') fail("unexpected character ')'");
        if (c == '|') {
            std::string s(1, '|');
            advance();
            while (pos_ < text_.size() && text_[pos_] != '|') {
                s += text_[pos_];
                advance();
            }
            if (pos_ >= text_.size()) fail("unexpected end of file in quoted symbol");
            advance();
            e.kind = SExpr::Kind::Symbol;
            e.text = s + "|";
            return e;
        }
        if (c == '"') {
            std::string s(1, '"');
            advance();
            while (true) {
                if (pos_ >= text_.size()) fail("unexpected end of file in string literal");
                if (text_[pos_] == '"') {
                    advance();
                    if (pos_ < text_.size() && text_[pos_] == '"') {
                        s += "\"\"";
                        advance();
                        continue;
                    }
                    break;
                }
                s += text_[pos_];
                advance();
            }
            e.kind = SExpr::Kind::String;
            e.text = s + "\"";
            return e;
        }
        std::string s;
        while (pos_ < text_.size()) {
            const char d = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')' || d == ';' || d == '|' ||
                d == '"') {
                break;
            }
            s += d;
            advance();
        }
        if (std::isdigit(static_cast<unsigned char>(s[0]))) {
            for (char d : s) {
                if (!std::isdigit(static_cast<unsigned char>(d))) fail("invalid numeral '" + s + "'");
            }
            e.kind = SExpr::Kind::Numeral;
        } else {
            e.kind = s[0] == ':' ? SExpr::Kind::Keyword : SExpr::Kind::Symbol;
        }
        e.text = s;
        return e;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

}  // namespace

std::vector<SExpr> parse_sexprs(std::string_view text) { return Reader(text).all(); }

std::string print_sexpr(const SExpr& e) {
    if (!e.is_list()) return e.text;
    std::string out = "(";
    for (std::size_t i = 0; i < e.items.size(); ++i) {
        if (i) out += ' ';
        out += print_sexpr(e.items[i]);
    }
    return out + ")";
}

std::string unquote_symbol(std::string_view s) {
    if (s.size() >= 2 && s.front() == '|' && s.back() == '|') return std::string(s.substr(1, s.size() - 2));
    return std::string(s);
}

std::string quote_symbol(std::string_view name) {
    static const std::set<std::string, std::less<>> reserved = {
        "and", "or", "not", "xor", "ite", "true", "false", "let", "forall", "exists", "distinct", "null",
        "assert", "div", "mod", "abs", "Int", "Bool", "Ptr", "_", "!", "as", "par", "match"};
    bool simple = !name.empty() && !std::isdigit(static_cast<unsigned char>(name[0])) && !reserved.contains(name);
    for (char c : name) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) simple = false;
    }
    if (simple) return std::string(name);
    std::string cleaned;
    for (char c : name) cleaned += (c == '|' || c == '\\') ? '_' : c;
    return "|" + cleaned + "|";
}

}  // namespace pfa
