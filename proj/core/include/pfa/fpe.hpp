// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfa/code_model.hpp"
#include "pfa/report.hpp"

namespace pfa {

/// One function's slice of the trace: the path from `entry` (S_f) to `exit` (T_f).
struct SegmentSpec {
    FunctionRef function;
    ProgramPoint entry;
    ProgramPoint exit;
    bool entry_is_function_start = false;
    bool exit_is_function_end = false;
    /// Name of the tracked value inside this function (parameter renaming applied).
    std::string target_var;
    /// Call at `exit` into the next trace function, when the flow continues downward.
    std::optional<CallEdge> exit_call;
};

/// Splits a resolved warning into one segment per trace function. Throws SegmentationError.
std::vector<SegmentSpec> segment_trace(const Warning& warning, const CodeIndex& index);

/// A CondNode oriented toward one of its arms.
struct Literal {
    std::size_t cond = 0;
    std::string text;  // the CondNode's condition, unoriented
    bool positive = true;
    friend bool operator==(const Literal&, const Literal&) = default;
};

struct JumpGuard {
    std::size_t jump = 0;
    JumpKind kind = JumpKind::Return;
    int line = 0;
    std::vector<Literal> guards;  // one (CondNode, JumpNode) pair per entry
};

struct CriticalBranchSet {
    std::vector<Literal> n_e;        // conditions enclosing T_f, oriented toward T_f
    std::vector<JumpGuard> n_jump;   // jumps between S_f and T_f that bypass T_f
    bool exit_unreachable = false;   // no control-flow path S_f -> T_f at all
};

/// Locates S_f/T_f in the CFG. Throws SegmentationError when a point is outside the function.
CfgPosition entry_position(const FunctionCfg& cfg, const SegmentSpec& seg);
CfgPosition exit_position(const FunctionCfg& cfg, const SegmentSpec& seg);

CriticalBranchSet extract_critical_branches(const FunctionCfg& cfg, const SegmentSpec& seg);

struct ConditionExpr {
    std::string text;               // C text as it must be asserted (before polarity)
    std::vector<Literal> literals;  // conjunction this text renders
    friend bool operator==(const ConditionExpr&, const ConditionExpr&) = default;
};

struct Fpe {
    std::vector<ConditionExpr> must_hold;
    std::vector<ConditionExpr> must_not_fully_hold;
    bool infeasible = false;  // sentinel: T_f cannot be reached at the control-flow level

    [[nodiscard]] bool empty() const { return must_hold.empty() && must_not_fully_hold.empty() && !infeasible; }
};

Fpe compute_fpe(const CriticalBranchSet& branches);

/// Renders `!(text)` with double negation removed.
std::string negate_condition(const std::string& text);

nlohmann::json to_json(const Fpe& fpe);
Fpe fpe_from_json(const nlohmann::json& j);

}  // namespace pfa
