// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pfa/c2smt.hpp"
#include "pfa/llm.hpp"
#include "pfa/range.hpp"
#include "pfa/solver.hpp"

namespace pfa {

/// `(set-logic ALL)`, the pointer sort, and `null`.
std::string minimal_template();

struct SmtScript {
    std::string template_text;                   // declarations preamble
    std::vector<std::string> constraint_blocks;  // assertions only

    /// Template, `; block N` separated blocks, and a final (check-sat).
    [[nodiscard]] std::string merged() const;
};

/// Reads a complete script back into template and blocks, splitting at `; block N` comments.
/// Throws Error(SolverError) when it does not parse.
SmtScript split_script(const std::string& text);

/// Nullary declarations of Bool, Int, or Ptr sort (excluding `null`).
SortMap declared_symbols(const std::string& smt_text);

/// Sorts for symbols used in `assertions` but absent from `declared`, inferred from usage.
SortMap infer_sorts(const std::string& assertions, const SortMap& declared);

/// One command per line with single spacing; in a preamble, declarations are sorted by symbol.
std::string normalize_smt(const std::string& text);

/// Assertion encoding a known range for a symbol of the given sort, if any.
std::optional<std::string> range_assertion(const SymbolicRange& r, std::optional<SmtSort> sort);

/// `name : Sort` lines for prompts.
std::string render_sorts(const SortMap& sorts);

struct SolveSession {
    SmtScript script;
    std::vector<SatResult> verdicts;
    int repair_attempts = 0;
    int max_repairs = 3;
    std::vector<std::string> diagnostics;
    bool closed = false;  // UNSAT reached, or repairs exhausted
    bool failed = false;  // repairs exhausted
    std::size_t solver_calls = 0;

    [[nodiscard]] SortMap sorts() const { return declared_symbols(script.template_text); }
};

/// Side notes from template generation and conversion.
struct SmtNotes {
    std::vector<std::string> diagnostics;
    bool degraded = false;
};

std::string generate_template(const std::vector<FeasiblePathConstraint>& preview, LlmBackend& llm,
                              const SortMap& hints, SmtNotes* notes = nullptr);

/// One assertion block for the constraint. Throws ConversionUnparseable after one retry.
std::string convert_constraint(const FeasiblePathConstraint& c, LlmBackend& llm, const SortMap& hints);

/// A block per constraint from a single conversion request. Throws ConversionUnparseable.
std::vector<std::string> convert_batch(const std::vector<FeasiblePathConstraint>& cs, LlmBackend& llm,
                                       const SortMap& hints);

/// Assertions for P: assumptions and propagated constraints, translated deterministically.
std::string initial_states_block(const InitialStates& p, const SortMap& hints);

/// Adds a block, declaring symbols it introduces.
void merge_block(SolveSession& session, const std::string& block, const SortMap& preferred = {});

/// Solves the current script, repairing solver errors through `repair_llm` (if given) up to the cap.
SatResult solve_session(SolveSession& session, SolverHandle& solver, LlmBackend* repair_llm);

SatResult merge_and_solve(SolveSession& session, const std::string& block, SolverHandle& solver,
                          LlmBackend* repair_llm = nullptr);

/// One repair round. Increments repair_attempts; throws ConversionUnparseable
/// when the candidate does not parse.
SmtScript repair_script(SolveSession& session, const std::string& diagnostic, LlmBackend& llm);

/// Extracts the SMT text of an answer: a ```smt2 block, or the bare answer if it starts with '('.
std::optional<std::string> smt_payload(const std::string& answer);

}  // namespace pfa
