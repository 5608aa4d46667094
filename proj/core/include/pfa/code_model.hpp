// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pfa/program.hpp"

namespace pfa {

struct FunctionDef {
    std::string name;
    std::string file;      // relative to the index root
    int begin_line = 0;    // first line of the declaration
    int body_line = 0;     // line of the opening brace
    int end_line = 0;      // line of the closing brace
    std::string text;      // full definition text starting at begin_line
    std::vector<std::string> params;
    bool is_macro = false;

    [[nodiscard]] FunctionRef ref() const { return {name, file}; }
    friend bool operator==(const FunctionDef&, const FunctionDef&) = default;
};

struct MacroDef {
    std::string name;
    std::string file;
    int line = 0;
    std::string text;
    bool function_like = false;
};

struct IndexOptions {
    std::vector<std::string> exclude_globs;
    /// When set, per-file results are reused from this JSON cache if the file
    /// content hash is unchanged, and the cache is rewritten afterwards.
    std::optional<std::filesystem::path> cache_path;
};

/// Name-keyed index of the C function definitions under one root. Immutable after build.
class CodeIndex {
public:
    CodeIndex() = default;
    explicit CodeIndex(std::filesystem::path root) : root_(std::move(root)) {}

    [[nodiscard]] const std::filesystem::path& root() const { return root_; }
    [[nodiscard]] const std::map<std::string, std::vector<FunctionDef>>& functions() const { return functions_; }
    [[nodiscard]] const std::map<std::string, MacroDef>& macros() const { return macros_; }
    [[nodiscard]] std::size_t function_count() const;

    /// Definition enclosing `line` of `file`, if any.
    [[nodiscard]] const FunctionDef* enclosing(const std::string& file, int line) const;
    [[nodiscard]] const FunctionDef* find(const FunctionRef& ref) const;
    /// Number of lines in an indexed file, 0 if the file was not scanned.
    [[nodiscard]] int line_count(const std::string& file) const;
    [[nodiscard]] std::string line_text(const std::string& file, int line) const;

    void add_file(const std::string& rel, const std::string& content);

    /// Function and macro definitions found in one file's content.
    static std::pair<std::vector<FunctionDef>, std::vector<MacroDef>> scan(const std::string& rel,
                                                                         const std::string& content);
    void add_scanned(const std::string& rel, const std::string& content, std::vector<FunctionDef> defs,
                     std::vector<MacroDef> macros);

private:
    std::filesystem::path root_;
    std::map<std::string, std::vector<FunctionDef>> functions_;
    std::map<std::string, MacroDef> macros_;
    std::map<std::string, std::vector<std::string>> lines_;
};

/// Indexes every `.c`/`.h` file under root. Throws EmptyIndex when nothing was found.
CodeIndex build_index(const std::filesystem::path& root, const IndexOptions& options = {});

/// The agent's retrieval tool. Throws NotFound or Ambiguous.
FunctionDef retrieve_function(const CodeIndex& index, const std::string& name,
                              const std::optional<std::string>& hint_file = std::nullopt);

/// Lines of `def` containing a call to `callee` (identifier followed by '('), ascending.
std::vector<int> call_lines(const FunctionDef& def, const std::string& callee);

// ---------------------------------------------------------------------------
// Control-flow graph

enum class EdgeKind { Fallthrough, True, False, Jump };
enum class CondKind { If, ElseIf, Switch, While, For };
enum class JumpKind { Goto, Return, Break, Continue };
enum class StmtRole { Plain, Condition, Jump, Label };

std::string to_string(CondKind kind);
std::string to_string(JumpKind kind);

/// A conditional node together with the arm a region lies in (true = then/body arm).
struct NestEntry {
    std::size_t cond = 0;
    bool arm = true;
    friend bool operator==(const NestEntry&, const NestEntry&) = default;
};

struct CfgStatement {
    int line = 0;
    int last_line = 0;
    std::string text;
    StmtRole role = StmtRole::Plain;
};

struct BasicBlock {
    std::size_t id = 0;
    std::vector<CfgStatement> stmts;
    std::vector<NestEntry> nesting;  // conditions enclosing this block, outermost first
    std::optional<std::size_t> cond;  // set when the block ends by evaluating this CondNode
    std::optional<std::size_t> jump;  // set when the block ends with this JumpNode
    bool dead = false;
};

struct CfgEdge {
    std::size_t from = 0;
    std::size_t to = 0;
    EdgeKind kind = EdgeKind::Fallthrough;
    bool back = false;  // loop back edge; ignored by path extraction
};

struct CondNode {
    CondKind kind = CondKind::If;
    std::string condition;  // normalized C text
    std::size_t block = 0;
    std::vector<NestEntry> nesting_path;
    int line = 0;
    bool forced_entry = false;  // do/while: body runs once before the condition
};

struct JumpNode {
    JumpKind kind = JumpKind::Return;
    std::size_t block = 0;
    std::vector<NestEntry> guarding_conds;
    int line = 0;
    std::string text;
    std::string label;  // goto target
};

struct CfgPosition {
    std::size_t block = 0;
    std::size_t index = 0;  // statement index inside the block
    friend bool operator==(const CfgPosition&, const CfgPosition&) = default;
};

struct FunctionCfg {
    FunctionRef function;
    std::vector<BasicBlock> blocks;
    std::vector<CfgEdge> edges;
    std::vector<CondNode> cond_nodes;
    std::vector<JumpNode> jump_nodes;
    std::size_t entry = 0;
    std::size_t exit = 0;

    /// Forward (non-back) successors in edge insertion order.
    [[nodiscard]] std::vector<std::size_t> forward_successors(std::size_t block) const;
    [[nodiscard]] std::vector<const CfgEdge*> out_edges(std::size_t block) const;
    /// Position of the first statement covering `line`, preferring live blocks.
    [[nodiscard]] std::optional<CfgPosition> locate(int line) const;
};

/// Builds the CFG of one function definition. Throws ParseError with file/line.
FunctionCfg build_cfg(const FunctionDef& def);

}  // namespace pfa
