// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pfa/cexpr.hpp"

namespace pfa {

enum class SmtSort { Bool, Int, Ptr };
std::string to_string(SmtSort s);
std::optional<SmtSort> smt_sort_from_string(const std::string& s);

/// Symbol sorts keyed by the unquoted symbol name (the C text of the atom).
using SortMap = std::map<std::string, SmtSort>;

enum class AtomKind {
    Variable,  // access path or indexed element
    Call,      // call of a named function
    Constant,  // macro-like all-caps identifier
    Opaque     // subexpression outside the encoded fragment
};

/// A leaf of a condition as the solver sees it: one symbol.
struct Atom {
    std::string text;  // canonical C text, also the symbol name
    AtomKind kind = AtomKind::Variable;
    std::optional<CallInfo> call;
};

/// Atoms of a condition in first-occurrence order. A condition that does not
/// parse is a single Opaque atom.
std::vector<Atom> condition_atoms(const std::string& c_text);

struct CTranslation {
    std::string term;  // Bool-sorted SMT-LIB2 term
    SortMap symbols;   // every symbol the term uses, except `null`
};

/// Deterministic encoding of a C condition. `hints` fixes sorts of known
/// symbols; the rest are chosen from context (Bool in conditions, Int in arithmetic).
CTranslation translate_condition(const std::string& c_text, const SortMap& hints = {});

/// SMT symbol for an atom's C text.
std::string atom_symbol(const std::string& c_text);

}  // namespace pfa
