// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pfa {

/// SMT-LIB2 s-expression. Symbols keep their `|quotes|` in `text`.
struct SExpr {
    enum class Kind { List, Symbol, Numeral, String, Keyword };
    Kind kind = Kind::List;
    std::string text;
    std::vector<SExpr> items;
    int line = 1;
    int column = 1;

    [[nodiscard]] bool is_list() const { return kind == Kind::List; }
    [[nodiscard]] bool is_symbol(std::string_view s) const { return kind == Kind::Symbol && text == s; }
    /// Head symbol of a non-empty list, empty otherwise.
    [[nodiscard]] std::string head() const;
};

/// Parses a sequence of top-level s-expressions. Throws Error(SolverError) with
/// a "line L column C: ..." message on malformed input.
std::vector<SExpr> parse_sexprs(std::string_view text);

/// Single-line canonical rendering.
std::string print_sexpr(const SExpr& e);

/// Removes surrounding `|` from a quoted symbol.
std::string unquote_symbol(std::string_view s);

/// Quotes a symbol when it is not a simple SMT-LIB symbol or collides with a reserved word.
std::string quote_symbol(std::string_view name);

}  // namespace pfa
