// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfa/llm.hpp"

namespace pfa {

/// Canned answer for one range question.
struct RangeRule {
    std::string function;      // enclosing function (variables) or callee (calls); empty matches any
    std::string subject;       // variable name; unused for calls
    std::string when;          // substring of the rendered initial states; empty matches any
    std::string need_context;  // ask for this function first
    std::string kind = "unknown";
    std::string value;         // bool / null state / predicate text
    std::optional<long long> low;
    std::optional<long long> high;
    std::string confidence = "definite";
};

/// Expressions whose conversion answer is replaced by `response`.
struct ConvertFault {
    std::string match;
    std::string response;
};

enum class FixMode { Repair, Echo, Garbage };

struct ExpertRules {
    std::vector<RangeRule> variables;
    std::vector<RangeRule> calls;
    std::vector<ConvertFault> convert_faults;
    FixMode fix = FixMode::Repair;
};

ExpertRules expert_rules_from_json(const nlohmann::json& j);
ExpertRules load_expert_rules(const std::filesystem::path& file);

/// Deterministic responder answering every template from rules and the
/// built-in C-to-SMT translator.
Responder expert_responder(ExpertRules rules);

/// Best-effort repair of a script given a solver diagnostic: re-derives
/// declarations from usage and drops assertions that still fail.
std::string repair_smt_script(const std::string& script);

}  // namespace pfa
