// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfa/c2smt.hpp"
#include "pfa/code_model.hpp"
#include "pfa/fpe.hpp"
#include "pfa/llm.hpp"

namespace pfa {

enum class SubjectKind { Variable, CallReturn };
enum class RangeKind { Interval, Boolean, NullState, Predicate, Unknown };
enum class NullState { Null, NonNull, Unknown };
enum class Confidence { Definite, Assumed, Unknown };

std::string to_string(RangeKind k);
std::string to_string(Confidence c);

struct SymbolicRange {
    SubjectKind subject_kind = SubjectKind::Variable;
    std::string subject;  // variable text, or canonical call text
    std::string callee;   // CallReturn only
    std::vector<std::string> args;
    RangeKind kind = RangeKind::Unknown;
    std::optional<std::int64_t> low;   // absent: unbounded
    std::optional<std::int64_t> high;
    bool bool_value = false;
    NullState null_state = NullState::Unknown;
    std::string predicate;
    Confidence confidence = Confidence::Unknown;

    [[nodiscard]] bool is_unknown() const { return kind == RangeKind::Unknown; }
    /// One-line description, e.g. `connected: false` or `len: [0, 16]`.
    [[nodiscard]] std::string describe() const;

    static SymbolicRange unknown_variable(const std::string& name);
    static SymbolicRange unknown_call(const CallInfo& call);
    friend bool operator==(const SymbolicRange&, const SymbolicRange&) = default;
};

nlohmann::json to_json(const SymbolicRange& r);
SymbolicRange symbolic_range_from_json(const nlohmann::json& j);

enum class Polarity { MustHold, MustNotFullyHold };
std::string to_string(Polarity p);

struct FeasiblePathConstraint {
    ConditionExpr expr;
    Polarity polarity = Polarity::MustHold;
    std::vector<SymbolicRange> ranges;

    /// The C predicate this constraint asserts (negated for MustNotFullyHold).
    [[nodiscard]] std::string asserted_text() const;
    friend bool operator==(const FeasiblePathConstraint&, const FeasiblePathConstraint&) = default;
};

nlohmann::json to_json(const FeasiblePathConstraint& c);
FeasiblePathConstraint constraint_from_json(const nlohmann::json& j);

/// The state P assumed at a segment's entry.
struct InitialStates {
    std::vector<std::string> assumptions;  // C predicates, e.g. `skb == NULL`
    std::vector<FeasiblePathConstraint> propagated;

    /// Assumptions then propagated constraints, as C predicates.
    [[nodiscard]] std::vector<std::string> predicates() const;
    /// Prompt rendering; "no assumptions" when empty.
    [[nodiscard]] std::string render() const;
};

/// Range of `subject` implied by P: `x == NULL`, `x != NULL`, or a propagated range.
std::optional<SymbolicRange> range_from_p(const InitialStates& p, const std::string& subject);

struct ParsedAnswer {
    std::optional<SymbolicRange> range;
    std::optional<std::string> need_context;  // function requested through the tool marker
    std::string problem;                      // why the answer did not match the schema
};

/// Reads the fenced ```range block or a `NEED_CONTEXT: name` line.
ParsedAnswer parse_range_answer(const std::string& text);

/// The fenced block an answer should end with.
std::string render_range_block(const SymbolicRange& r);

/// Predicates of P that mention the call's arguments, with arguments renamed to
/// argN and remaining identifiers to v0, v1, ... after sorting.
std::string canonical_p(const InitialStates& p, const CallInfo& call);
std::string memory_key(const FunctionRef& callee, const std::string& canonical);

/// Cache of call-return ranges keyed by (callee, canonical P). Write-once,
/// concurrent readers, one computation per key.
class MemoryStore {
public:
    struct Entry {
        std::string key;
        std::string callee;
        std::string file;
        std::string canonical_p;
        SymbolicRange value;
        std::string transcript_ref;
    };

    /// Returns the cached range or runs `compute` exactly once per key; concurrent
    /// requests for the same key wait for the first.
    SymbolicRange get_or_compute(const std::string& key, const std::function<Entry()>& compute, bool* hit = nullptr);
    [[nodiscard]] std::optional<Entry> lookup(const std::string& key) const;
    [[nodiscard]] std::vector<Entry> entries() const;
    [[nodiscard]] std::size_t size() const;
    void clear();

    void load(const std::filesystem::path& file);
    void save(const std::filesystem::path& file) const;

private:
    mutable std::shared_mutex mutex_;
    std::map<std::string, Entry> entries_;
    std::map<std::string, std::shared_future<Entry>> pending_;
};

struct ReasonerLimits {
    int context_depth = 5;
    bool no_context = false;
    int max_tool_calls = 5;  // per agent level
};

/// Instrumentation for one warning's reasoning.
struct ReasonerStats {
    std::size_t variable_prompts = 0;
    std::size_t call_prompts = 0;
    std::size_t memory_hits = 0;
    std::size_t depth_cap_hits = 0;
    int deepest_prompt = -1;  // deepest agent depth that reached the LLM
    bool degraded = false;    // an infrastructure failure was absorbed as Unknown
    std::vector<std::string> diagnostics;
};

SymbolicRange reason_variable_range(const ConditionExpr& expr, const std::string& var, const InitialStates& p,
                                    const FunctionDef& body, LlmBackend& llm, ReasonerStats* stats = nullptr);

SymbolicRange reason_call_range(const CallInfo& call, const InitialStates& p, int depth, MemoryStore& memory,
                                const CodeIndex& index, LlmBackend& llm, const ReasonerLimits& limits = {},
                                ReasonerStats* stats = nullptr, const std::string& caller_file = {});

struct ReasoningContext {
    const CodeIndex* index = nullptr;
    LlmBackend* llm = nullptr;
    MemoryStore* memory = nullptr;
    const FunctionDef* body = nullptr;
    std::string target_var;
    std::vector<std::string> aliases;
    ReasonerLimits limits;
    ReasonerStats stats;
};

/// True if the call's ranges should be reasoned: an argument is the target,
/// an alias, or appears in P.
bool call_is_relevant(const CallInfo& call, const InitialStates& p, const ReasoningContext& ctx);

/// Lazily yields one constraint per FPE expression, MustHold first, reasoning
/// ranges only when pulled.
class ConstraintStream {
public:
    ConstraintStream(const Fpe& fpe, InitialStates p, ReasoningContext& ctx);

    [[nodiscard]] bool infeasible() const { return infeasible_; }
    [[nodiscard]] std::size_t size() const { return pending_.size(); }
    /// Constraints without ranges, for template generation.
    [[nodiscard]] const std::vector<FeasiblePathConstraint>& preview() const { return pending_; }
    std::optional<FeasiblePathConstraint> next();

private:
    std::vector<FeasiblePathConstraint> pending_;
    std::size_t cursor_ = 0;
    InitialStates p_;
    ReasoningContext* ctx_;
    bool infeasible_ = false;
};

ConstraintStream assemble_constraints(const Fpe& fpe, const InitialStates& p, ReasoningContext& ctx);

/// Renames access paths in a C expression (whole-path matches only).
std::string rename_paths(const std::string& c_text, const std::map<std::string, std::string>& renames);

/// Constraints of the finished segment that mention arguments of `exit_call`,
/// rewritten in terms of the callee's parameters.
std::vector<FeasiblePathConstraint> propagate_constraints(const std::vector<FeasiblePathConstraint>& surviving,
                                                          const CallInfo& exit_call, const FunctionDef& callee);

/// Sort hints implied by P, the tracked pointer, and known ranges.
SortMap sort_hints(const InitialStates& p, const std::string& target_var, const std::vector<std::string>& aliases,
                   const std::vector<SymbolicRange>& ranges = {});

}  // namespace pfa
