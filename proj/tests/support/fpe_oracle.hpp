// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pfa/code_model.hpp"
#include "pfa/fpe.hpp"

namespace pfa::testing {

/// A function from the marked corpus: `/*S*/` on the entry line (optional), `/*T*/` on the sink.
struct MarkedFunction {
    FunctionDef def;
    SegmentSpec segment;
};

std::vector<MarkedFunction> load_marked_corpus(const std::filesystem::path& file);

using Assignment = std::map<std::string, bool>;

/// Distinct condition texts of the CFG; each one is a free Boolean atom.
std::vector<std::string> atoms_of(const FunctionCfg& cfg);

/// Every forward CFG path from the segment entry to its exit, as the
/// (condition text, arm) pairs taken along the way.
std::vector<std::vector<std::pair<std::string, bool>>> enumerate_paths(const FunctionCfg& cfg,
                                                                        const SegmentSpec& seg);

bool some_path_admits(const std::vector<std::vector<std::pair<std::string, bool>>>& paths, const Assignment& a);
bool fpe_holds(const Fpe& fpe, const Assignment& a);

struct OracleMismatch {
    std::string function;
    Assignment assignment;
    bool fpe = false;
    bool paths = false;
};

/// Compares the FPE with path enumeration under every assignment of the atoms.
std::vector<OracleMismatch> check_against_paths(const MarkedFunction& fn);

std::string describe(const OracleMismatch& m);

}  // namespace pfa::testing
