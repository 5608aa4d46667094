// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pfa {

enum class ErrorCode {
    MalformedReport,
    UnknownRuleId,
    UnresolvedTrace,
    EmptyIndex,
    NotFound,
    Ambiguous,
    ParseError,
    SegmentationError,
    BackendError,
    ReplayMiss,
    ConversionUnparseable,
    SolverError,
    MissingLabel,
    ConfigError,
    BudgetExhausted,
    InjectedFault,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every recoverable failure raised by the analysis modules.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace pfa
