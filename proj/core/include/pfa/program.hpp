// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <optional>
#include <string>

namespace pfa {

/// A location in the analyzed project. `file` is relative to the project root.
struct ProgramPoint {
    std::string file;
    int line = 0;
    std::optional<int> column;
    std::string expr_text;

    friend bool operator==(const ProgramPoint&, const ProgramPoint&) = default;
};

/// Identifies one function definition; `file` disambiguates static duplicates.
struct FunctionRef {
    std::string name;
    std::string file;

    friend auto operator<=>(const FunctionRef&, const FunctionRef&) = default;
};

}  // namespace pfa
