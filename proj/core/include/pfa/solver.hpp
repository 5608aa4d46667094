// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace pfa {

enum class SatResult { SAT, UNSAT, UNKNOWN };
std::string to_string(SatResult r);

/// Raw exchange with a solver for one script.
struct SolverReply {
    std::string output;
    bool timed_out = false;
    int exit_status = 0;
};

/// Interpretation of a reply: a verdict, or an error diagnostic when the
/// solver rejected the script.
struct SolverOutcome {
    SatResult result = SatResult::UNKNOWN;
    bool error = false;
    std::string diagnostic;
};

SolverOutcome interpret_reply(const SolverReply& reply);

class SolverHandle {
public:
    virtual ~SolverHandle() = default;
    /// Runs a complete script ending in (check-sat).
    virtual SolverReply run(const std::string& script) = 0;
    [[nodiscard]] virtual std::string name() const = 0;
};

using SolverFactory = std::function<std::unique_ptr<SolverHandle>()>;

/// Speaks SMT-LIB2 over stdin/stdout with an external process, one process per script.
class SubprocessSolver final : public SolverHandle {
public:
    SubprocessSolver(std::vector<std::string> argv, std::chrono::milliseconds timeout);
    SolverReply run(const std::string& script) override;
    [[nodiscard]] std::string name() const override;

private:
    std::vector<std::string> argv_;
    std::chrono::milliseconds timeout_;
};

struct BuiltinLimits {
    /// Search nodes visited before giving up with `unknown`.
    std::size_t max_nodes = 2'000'000;
};

/// In-process solver for quantifier-free Bool/Int scripts with uninterpreted
/// sorts. Complete for Booleans, uninterpreted constants, and integer atoms
/// that compare one variable to a constant; otherwise a failed search reports `unknown`.
class BuiltinSolver final : public SolverHandle {
public:
    explicit BuiltinSolver(BuiltinLimits limits = {}) : limits_(limits) {}
    SolverReply run(const std::string& script) override;
    [[nodiscard]] std::string name() const override { return "builtin"; }

private:
    BuiltinLimits limits_;
};

/// Output the builtin solver prints for `script`: one line per (check-sat)
/// and `(error "line L column C: ...")` lines for rejected commands.
std::string run_builtin_solver(const std::string& script, BuiltinLimits limits = {});

/// "builtin" or a command line such as "z3 -in".
SolverFactory make_solver_factory(const std::string& command, std::chrono::milliseconds timeout);

}  // namespace pfa
