// SPDX-License-Identifier: Apache-2.0
#include "pfa/error.hpp"

namespace pfa {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MalformedReport: return "MalformedReport";
        case ErrorCode::UnknownRuleId: return "UnknownRuleId";
        case ErrorCode::UnresolvedTrace: return "UnresolvedTrace";
        case ErrorCode::EmptyIndex: return "EmptyIndex";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::Ambiguous: return "Ambiguous";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::SegmentationError: return "SegmentationError";
        case ErrorCode::BackendError: return "BackendError";
        case ErrorCode::ReplayMiss: return "ReplayMiss";
        case ErrorCode::ConversionUnparseable: return "ConversionUnparseable";
        case ErrorCode::SolverError: return "SolverError";
        case ErrorCode::MissingLabel: return "MissingLabel";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::BudgetExhausted: return "BudgetExhausted";
        case ErrorCode::InjectedFault: return "InjectedFault";
    }
    return "Unknown";
}

}  // namespace pfa
