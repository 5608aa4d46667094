// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pfa {

enum class TokenKind { Identifier, Number, String, Char, Punct, Directive };

struct Token {
    TokenKind kind;
    std::string text;
    int line = 0;    // 1-based
    int column = 0;  // 1-based
    std::size_t offset = 0;  // byte offset in the lexed buffer

    [[nodiscard]] bool is(std::string_view s) const { return text == s && kind != TokenKind::String; }
    [[nodiscard]] bool is_ident() const { return kind == TokenKind::Identifier; }
};

/// Tokenizes C source. Comments are dropped; preprocessor lines become a
/// single Directive token (line continuations joined). `first_line` offsets
/// the reported line numbers when lexing a slice of a larger file.
std::vector<Token> lex_c(std::string_view source, int first_line = 1);

bool is_c_keyword(std::string_view word);

/// Joins tokens back into text with a single space between tokens that
/// would otherwise merge and none elsewhere.
std::string join_tokens(const std::vector<Token>& tokens, std::size_t begin, std::size_t end);

}  // namespace pfa
