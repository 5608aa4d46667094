// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pfa/lexer.hpp"

namespace pfa {

enum class ExprKind { Identifier, Number, String, Char, Unary, Postfix, Binary, Ternary, Call, Member, Index, Cast, Sizeof };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Minimal C expression tree. `op` holds the operator, identifier, literal,
/// member name (Member), or type text (Cast, Sizeof of a type).
struct Expr {
    ExprKind kind;
    std::string op;
    std::vector<ExprPtr> kids;
    bool arrow = false;  // Member: `->` vs `.`
};

/// Parses one C expression. Throws Error(ParseError) on malformed input or trailing tokens.
ExprPtr parse_c_expr(std::string_view text);
ExprPtr parse_c_expr(const std::vector<Token>& tokens, std::size_t begin, std::size_t end);

/// Canonical rendering: single spaces around binary operators, no redundant parentheses.
std::string print_expr(const Expr& e);

/// Whitespace-insensitive canonical form of a condition; falls back to
/// collapsing whitespace when the text does not parse.
std::string normalize_condition(std::string_view text);

/// Identifier/member chains such as `p`, `dev->flags`, `s.len` that appear as
/// values (not as callees). Deduplicated, in first-occurrence order.
std::vector<std::string> access_paths(const Expr& e);

struct CallInfo {
    std::string callee;
    std::vector<std::string> args;  // canonical text per argument
    std::string text;               // canonical text of the whole call
};

/// Calls to named functions, innermost first, deduplicated by text.
std::vector<CallInfo> calls_in(const Expr& e);

/// First call to `callee` on a source line, or nullopt when absent or unbalanced.
std::optional<CallInfo> call_on_line(std::string_view line, const std::string& callee);

/// True for Identifier and Member chains rooted at an Identifier.
bool is_access_path(const Expr& e);

}  // namespace pfa
