// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <gtest/gtest.h>

#include "pfa/code_model.hpp"
#include "pfa/error.hpp"

namespace pfa::testing {

/// Indexes `src` as file `file` and returns the definition of `name`.
inline FunctionDef def_of(const std::string& src, const std::string& name, const std::string& file = "t.c") {
    CodeIndex index(".");
    index.add_file(file, src);
    return index.functions().at(name).at(0);
}

inline FunctionCfg cfg_of(const std::string& src, const std::string& name) { return build_cfg(def_of(src, name)); }

}  // namespace pfa::testing

#define EXPECT_PFA_ERROR(stmt, code_)                                          \
    do {                                                                       \
        try {                                                                  \
            stmt;                                                              \
            ADD_FAILURE() << "expected " << ::pfa::to_string(code_);           \
        } catch (const ::pfa::Error& e_) {                                     \
            EXPECT_EQ(e_.code(), code_) << e_.what();                          \
        }                                                                      \
    } while (0)
