// SPDX-License-Identifier: Apache-2.0
#include "pfa/lexer.hpp"

#include <array>
#include <cctype>
#include <unordered_set>

namespace pfa {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

constexpr std::array<std::string_view, 23> kMultiPunct = {
    ">>=", "<<=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&",  "||",  "+=",  "-=", "*=", "/=", "%=", "&=", "|=", "^=", "##",
};

}  // namespace

bool is_c_keyword(std::string_view word) {
    static const std::unordered_set<std::string_view> kKeywords = {
        "auto",     "break",  "case",     "char",   "const",    "continue", "default",
        "do",       "double", "else",     "enum",   "extern",   "float",    "for",
        "goto",     "if",     "inline",   "int",    "long",     "register", "restrict",
        "return",   "short",  "signed",   "sizeof", "static",   "struct",   "switch",
        "typedef",  "union",  "unsigned", "void",   "volatile", "while",    "_Bool",
        "bool",     "__inline", "__inline__", "__attribute__", "asm", "__asm__",
    };
    return kKeywords.contains(word);
}

std::vector<Token> lex_c(std::string_view src, int first_line) {
    std::vector<Token> out;
    int line = first_line;
    std::size_t line_start = 0;
    std::size_t i = 0;
    bool at_line_start = true;
    const std::size_t n = src.size();

    auto make = [&](TokenKind kind, std::size_t begin, std::size_t end, int tok_line, std::size_t tok_line_start) {
        out.push_back(Token{kind, std::string(src.substr(begin, end - begin)), tok_line,
                            static_cast<int>(begin - tok_line_start) + 1, begin});
    };

    while (i < n) {
        char c = src[i];
        if (c == '\n') {
            ++line;
            line_start = ++i;
            at_line_start = true;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && src[i + 1] == '/') {
            while (i < n && src[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && src[i + 1] == '*') {
            i += 2;
            while (i + 1 < n && !(src[i] == '*' && src[i + 1] == '/')) {
                if (src[i] == '\n') {
                    ++line;
                    line_start = i + 1;
                }
                ++i;
            }
            i = i + 2 <= n ? i + 2 : n;
            continue;
        }
        if (c == '#' && at_line_start) {
            const int tok_line = line;
            const std::size_t tok_line_start = line_start;
            std::size_t begin = i;
            std::string text;
            while (i < n && src[i] != '\n') {
                if (src[i] == '\\' && i + 1 < n && src[i + 1] == '\n') {
                    text.push_back(' ');
                    i += 2;
                    ++line;
                    line_start = i;
                    continue;
                }
                if (src[i] == '/' && i + 1 < n && src[i + 1] == '/') {
                    while (i < n && src[i] != '\n') ++i;
                    break;
                }
                text.push_back(src[i]);
                ++i;
            }
            out.push_back(Token{TokenKind::Directive, std::move(text), tok_line,
                                static_cast<int>(begin - tok_line_start) + 1, begin});
            continue;
        }
        at_line_start = false;
        const std::size_t begin = i;
        if (ident_start(c)) {
            while (i < n && ident_char(src[i])) ++i;
            // String/char literal prefixes such as L"..." fall through to literals below.
            make(TokenKind::Identifier, begin, i, line, line_start);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            while (i < n && (ident_char(src[i]) || src[i] == '.' ||
                             ((src[i] == '+' || src[i] == '-') && (src[i - 1] == 'e' || src[i - 1] == 'E') &&
                              !(src[begin] == '0' && begin + 1 < n && (src[begin + 1] == 'x' || src[begin + 1] == 'X'))))) {
                ++i;
            }
            make(TokenKind::Number, begin, i, line, line_start);
            continue;
        }
        if (c == '"' || c == '\'') {
            const char quote = c;
            ++i;
            while (i < n && src[i] != quote && src[i] != '\n') {
                if (src[i] == '\\' && i + 1 < n) ++i;
                ++i;
            }
            if (i < n && src[i] == quote) ++i;
            make(quote == '"' ? TokenKind::String : TokenKind::Char, begin, i, line, line_start);
            continue;
        }
        std::size_t len = 1;
        for (std::string_view p : kMultiPunct) {
            if (src.substr(i, p.size()) == p) {
                len = p.size();
                break;
            }
        }
        i += len;
        make(TokenKind::Punct, begin, i, line, line_start);
    }
    return out;
}

std::string join_tokens(const std::vector<Token>& tokens, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t k = begin; k < end && k < tokens.size(); ++k) {
        const Token& t = tokens[k];
        if (!out.empty()) {
            const char prev = out.back();
            const char next = t.text.front();
            if ((ident_char(prev) && ident_char(next)) || (!ident_char(prev) && !ident_char(next) &&
                                                          prev != '(' && prev != '[' && next != ')' &&
                                                          next != ']' && next != ';' && next != ',')) {
                out.push_back(' ');
            } else if (prev == ',') {
                out.push_back(' ');
            }
        }
        out += t.text;
    }
    return out;
}

}  // namespace pfa
