// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "pfa/cexpr.hpp"
#include "pfa/code_model.hpp"
#include "pfa/error.hpp"
#include "pfa/lexer.hpp"

namespace pfa {

std::string to_string(CondKind kind) {
    switch (kind) {
        case CondKind::If: return "If";
        case CondKind::ElseIf: return "ElseIf";
        case CondKind::Switch: return "Switch";
        case CondKind::While: return "While";
        case CondKind::For: return "For";
    }
    return "?";
}

std::string to_string(JumpKind kind) {
    switch (kind) {
        case JumpKind::Goto: return "Goto";
        case JumpKind::Return: return "Return";
        case JumpKind::Break: return "Break";
        case JumpKind::Continue: return "Continue";
    }
    return "?";
}

namespace {

// ---------------------------------------------------------------------------
// Statement tree

struct Stmt {
    enum class Kind { Compound, If, Switch, While, DoWhile, For, Return, Break, Continue, Goto, Label, Case, Default, Simple };
    Kind kind = Kind::Simple;
    int line = 0;
    int last_line = 0;
    std::string text;  // condition, label, case value, or statement text
    std::string init;  // for-init
    bool empty_cond = false;
    std::vector<Stmt> kids;
};

class StmtParser {
public:
    StmtParser(const std::vector<Token>& toks, std::string file) : toks_(toks), file_(std::move(file)) {}

    Stmt parse_body(std::size_t open) {
        pos_ = open;
        return parse_statement();
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        const int line = pos_ < toks_.size() ? toks_[pos_].line : (toks_.empty() ? 0 : toks_.back().line);
        throw Error(ErrorCode::ParseError, file_ + ":" + std::to_string(line) + ": " + msg);
    }
    bool at(std::string_view s) const { return pos_ < toks_.size() && toks_[pos_].is(s); }
    void expect(std::string_view s) {
        if (!at(s)) fail("expected '" + std::string(s) + "'");
        ++pos_;
    }
    std::size_t match(std::size_t open, std::string_view o, std::string_view c) const {
        int depth = 0;
        for (std::size_t k = open; k < toks_.size(); ++k) {
            if (toks_[k].kind != TokenKind::Punct) continue;
            if (toks_[k].text == o) ++depth;
            if (toks_[k].text == c && --depth == 0) return k;
        }
        fail("unbalanced '" + std::string(o) + "'");
    }

    std::string cond_text(std::size_t begin, std::size_t end) const {
        if (begin >= end) return {};
        try {
            return print_expr(*parse_c_expr(toks_, begin, end));
        } catch (const Error&) {
            return normalize_condition(join_tokens(toks_, begin, end));
        }
    }

    // `( expr )` starting at pos_; returns normalized text.
    std::string paren_condition(int& line) {
        if (!at("(")) fail("expected '('");
        const std::size_t close = match(pos_, "(", ")");
        line = toks_[pos_].line;
        std::string text = cond_text(pos_ + 1, close);
        pos_ = close + 1;
        return text;
    }

    // Scans to the terminating ';' at depth 0; returns index of ';'.
    std::size_t scan_to_semicolon(std::size_t from) const {
        int depth = 0;
        for (std::size_t k = from; k < toks_.size(); ++k) {
            const Token& t = toks_[k];
            if (t.kind != TokenKind::Punct) continue;
            if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
            if (t.text == ")" || t.text == "]" || t.text == "}") {
                if (depth == 0) return k;  // unterminated statement before a closing brace
                --depth;
            }
            if (depth == 0 && t.text == ";") return k;
        }
        return toks_.size();
    }

    Stmt parse_statement() {
        while (pos_ < toks_.size() && toks_[pos_].kind == TokenKind::Directive) ++pos_;
        if (pos_ >= toks_.size()) fail("unexpected end of function body");
        const Token& t = toks_[pos_];
        Stmt s;
        s.line = t.line;
        if (t.is("{")) {
            s.kind = Stmt::Kind::Compound;
            ++pos_;
            while (!at("}")) {
                if (pos_ >= toks_.size()) fail("missing '}'");
                if (toks_[pos_].kind == TokenKind::Directive) {
                    ++pos_;
                    continue;
                }
                s.kids.push_back(parse_statement());
            }
            s.last_line = toks_[pos_].line;
            ++pos_;
            return s;
        }
        if (t.is(";")) {
            ++pos_;
            s.kind = Stmt::Kind::Simple;
            s.last_line = s.line;
            return s;
        }
        if (t.is_ident()) {
            const std::string& w = t.text;
            if (w == "if") {
                ++pos_;
                s.kind = Stmt::Kind::If;
                s.text = paren_condition(s.line);
                s.kids.push_back(parse_statement());
                if (at("else")) {
                    ++pos_;
                    s.kids.push_back(parse_statement());
                }
                s.last_line = s.kids.back().last_line;
                return s;
            }
            if (w == "switch" || w == "while") {
                ++pos_;
                s.kind = w == "switch" ? Stmt::Kind::Switch : Stmt::Kind::While;
                s.text = paren_condition(s.line);
                s.kids.push_back(parse_statement());
                s.last_line = s.kids.back().last_line;
                return s;
            }
            if (w == "do") {
                ++pos_;
                s.kind = Stmt::Kind::DoWhile;
                s.kids.push_back(parse_statement());
                if (!at("while")) fail("expected 'while' after do body");
                ++pos_;
                int cond_line = 0;
                s.text = paren_condition(cond_line);
                s.last_line = cond_line;
                s.line = cond_line;
                expect(";");
                return s;
            }
            if (w == "for") {
                ++pos_;
                s.kind = Stmt::Kind::For;
                if (!at("(")) fail("expected '(' after for");
                const std::size_t close = match(pos_, "(", ")");
                std::size_t first_semi = scan_to_semicolon(pos_ + 1);
                if (first_semi >= close) fail("malformed for header");
                std::size_t second_semi = scan_to_semicolon(first_semi + 1);
                if (second_semi >= close) fail("malformed for header");
                s.init = join_tokens(toks_, pos_ + 1, first_semi);
                s.text = cond_text(first_semi + 1, second_semi);
                s.empty_cond = first_semi + 1 == second_semi;
                s.line = toks_[pos_].line;
                pos_ = close + 1;
                s.kids.push_back(parse_statement());
                s.last_line = s.kids.back().last_line;
                return s;
            }
            if (w == "return" || w == "break" || w == "continue" || w == "goto") {
                const std::size_t semi = scan_to_semicolon(pos_);
                if (semi >= toks_.size() || !toks_[semi].is(";")) fail("missing ';'");
                s.kind = w == "return"     ? Stmt::Kind::Return
                         : w == "break"    ? Stmt::Kind::Break
                         : w == "continue" ? Stmt::Kind::Continue
                                           : Stmt::Kind::Goto;
                s.text = join_tokens(toks_, pos_, semi + 1);
                if (s.kind == Stmt::Kind::Goto) {
                    if (pos_ + 1 >= semi || !toks_[pos_ + 1].is_ident()) {
                        fail("computed goto is not supported");
                    }
                    s.init = toks_[pos_ + 1].text;
                }
                s.last_line = toks_[semi].line;
                pos_ = semi + 1;
                return s;
            }
            if (w == "case") {
                std::size_t k = pos_ + 1;
                int depth = 0;
                for (; k < toks_.size(); ++k) {
                    if (toks_[k].is("(")) ++depth;
                    if (toks_[k].is(")")) --depth;
                    if (depth == 0 && toks_[k].is(":")) break;
                }
                if (k >= toks_.size()) fail("case without ':'");
                s.kind = Stmt::Kind::Case;
                s.text = cond_text(pos_ + 1, k);
                s.last_line = toks_[k].line;
                pos_ = k + 1;
                return s;
            }
            if (w == "default" && pos_ + 1 < toks_.size() && toks_[pos_ + 1].is(":")) {
                s.kind = Stmt::Kind::Default;
                s.last_line = s.line;
                pos_ += 2;
                return s;
            }
            if (!is_c_keyword(w) && pos_ + 1 < toks_.size() && toks_[pos_ + 1].is(":")) {
                s.kind = Stmt::Kind::Label;
                s.text = w;
                s.last_line = s.line;
                pos_ += 2;
                if (at("}")) return s;
                s.kids.push_back(parse_statement());
                return s;
            }
            // Iterator macros such as `list_for_each_entry(pos, head, member) { ... }`.
            if (!is_c_keyword(w) && pos_ + 1 < toks_.size() && toks_[pos_ + 1].is("(")) {
                const std::size_t close = match(pos_ + 1, "(", ")");
                if (close + 1 < toks_.size() && toks_[close + 1].is("{")) {
                    s.kind = Stmt::Kind::While;
                    s.text = cond_text(pos_, close + 1);
                    pos_ = close + 1;
                    s.kids.push_back(parse_statement());
                    s.last_line = s.kids.back().last_line;
                    return s;
                }
            }
        }
        const std::size_t semi = scan_to_semicolon(pos_);
        if (semi >= toks_.size()) fail("missing ';'");
        s.kind = Stmt::Kind::Simple;
        s.text = join_tokens(toks_, pos_, toks_[semi].is(";") ? semi + 1 : semi);
        s.last_line = toks_[semi].line;
        pos_ = toks_[semi].is(";") ? semi + 1 : semi;
        return s;
    }

    const std::vector<Token>& toks_;
    std::string file_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Lowering

class Lowering {
public:
    explicit Lowering(FunctionCfg& cfg) : cfg_(cfg) {}

    void run(const Stmt& body) {
        cfg_.entry = new_block({});
        cfg_.exit = new_block({});
        cur_ = cfg_.entry;
        lower(body);
        if (cur_ != kNone) add_edge(cur_, cfg_.exit, EdgeKind::Fallthrough);
        for (const auto& [block, label] : pending_gotos_) {
            auto it = labels_.find(label);
            if (it == labels_.end()) {
                throw Error(ErrorCode::ParseError, cfg_.function.file + ": goto to undefined label '" + label + "'");
            }
            add_edge(block, it->second, EdgeKind::Jump);
        }
        finish();
    }

private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

    struct LoopCtx {
        std::size_t break_target;
        std::size_t continue_target;
        bool is_switch;
    };

    std::size_t new_block(std::vector<NestEntry> nesting) {
        BasicBlock b;
        b.id = cfg_.blocks.size();
        b.nesting = std::move(nesting);
        cfg_.blocks.push_back(std::move(b));
        return cfg_.blocks.size() - 1;
    }

    void add_edge(std::size_t from, std::size_t to, EdgeKind kind) { cfg_.edges.push_back(CfgEdge{from, to, kind, false}); }

    // Ensures there is a current block; code after a jump lands in a fresh unreachable block.
    std::size_t current() {
        if (cur_ == kNone) cur_ = new_block(nesting_);
        return cur_;
    }

    std::size_t add_cond(CondKind kind, const std::string& text, int line, std::size_t block) {
        CondNode c;
        c.kind = kind;
        c.condition = text;
        c.block = block;
        c.nesting_path = cfg_.blocks[block].nesting;
        c.line = line;
        cfg_.cond_nodes.push_back(c);
        const std::size_t id = cfg_.cond_nodes.size() - 1;
        cfg_.blocks[block].stmts.push_back(CfgStatement{line, line, text, StmtRole::Condition});
        cfg_.blocks[block].cond = id;
        return id;
    }

    // Starts a block that ends by evaluating a condition; reuses the current
    // block when it is still empty so `else if` does not chain empty blocks.
    std::size_t cond_block() {
        std::size_t b = current();
        if (!cfg_.blocks[b].stmts.empty() || cfg_.blocks[b].cond) {
            const std::size_t nb = new_block(nesting_);
            add_edge(b, nb, EdgeKind::Fallthrough);
            b = nb;
        }
        return b;
    }

    void add_jump(JumpKind kind, const Stmt& s, std::size_t target, bool has_target, bool record) {
        const std::size_t b = current();
        cfg_.blocks[b].stmts.push_back(CfgStatement{s.line, s.last_line, s.text, StmtRole::Jump});
        if (record) {
            JumpNode j;
            j.kind = kind;
            j.block = b;
            j.guarding_conds = cfg_.blocks[b].nesting;
            j.line = s.line;
            j.text = s.text;
            j.label = s.init;
            cfg_.jump_nodes.push_back(j);
            cfg_.blocks[b].jump = cfg_.jump_nodes.size() - 1;
        }
        if (has_target) {
            add_edge(b, target, EdgeKind::Jump);
        } else {
            pending_gotos_.emplace_back(b, s.init);
        }
        cur_ = kNone;
    }

    void lower_if(const Stmt& s, CondKind kind) {
        const std::size_t cb = cond_block();
        const std::size_t c = add_cond(kind, s.text, s.line, cb);
        const auto saved = nesting_;

        nesting_.push_back({c, true});
        const std::size_t then_b = new_block(nesting_);
        add_edge(cb, then_b, EdgeKind::True);
        cur_ = then_b;
        lower(s.kids[0]);
        const std::size_t then_end = cur_;
        nesting_ = saved;

        std::size_t else_end = kNone;
        std::size_t else_b = kNone;
        if (s.kids.size() > 1) {
            nesting_.push_back({c, false});
            else_b = new_block(nesting_);
            add_edge(cb, else_b, EdgeKind::False);
            cur_ = else_b;
            const Stmt& e = s.kids[1];
            if (e.kind == Stmt::Kind::If) {
                lower_if(e, CondKind::ElseIf);
            } else {
                lower(e);
            }
            else_end = cur_;
            nesting_ = saved;
        }
        const std::size_t join = new_block(nesting_);
        if (then_end != kNone) add_edge(then_end, join, EdgeKind::Fallthrough);
        if (else_b == kNone) {
            add_edge(cb, join, EdgeKind::False);
        } else if (else_end != kNone) {
            add_edge(else_end, join, EdgeKind::Fallthrough);
        }
        cur_ = join;
    }

    void lower_loop(const Stmt& s) {
        const bool is_for = s.kind == Stmt::Kind::For;
        if (is_for && !s.init.empty()) {
            cfg_.blocks[current()].stmts.push_back(CfgStatement{s.line, s.line, s.init, StmtRole::Plain});
        }
        const std::size_t head = new_block(nesting_);
        add_edge(current(), head, EdgeKind::Fallthrough);
        const auto saved = nesting_;
        const bool unconditional = is_for && s.empty_cond;
        std::size_t c = kNone;
        if (!unconditional) {
            c = add_cond(is_for ? CondKind::For : CondKind::While, s.text, s.line, head);
            nesting_.push_back({c, true});
        }
        const std::size_t body = new_block(nesting_);
        add_edge(head, body, unconditional ? EdgeKind::Fallthrough : EdgeKind::True);
        const std::size_t exit = new_block(saved);
        if (!unconditional) add_edge(head, exit, EdgeKind::False);

        loops_.push_back({exit, head, false});
        cur_ = body;
        lower(s.kids[0]);
        if (cur_ != kNone) add_edge(cur_, head, EdgeKind::Fallthrough);
        loops_.pop_back();
        nesting_ = saved;
        cur_ = exit;
    }

    void lower_do_while(const Stmt& s) {
        const std::size_t body = new_block(nesting_);
        add_edge(current(), body, EdgeKind::Fallthrough);
        const std::size_t cond = new_block(nesting_);
        const std::size_t exit = new_block(nesting_);
        loops_.push_back({exit, cond, false});
        cur_ = body;
        lower(s.kids[0]);
        if (cur_ != kNone) add_edge(cur_, cond, EdgeKind::Fallthrough);
        loops_.pop_back();
        const std::size_t c = add_cond(CondKind::While, s.text, s.line, cond);
        cfg_.cond_nodes[c].forced_entry = true;
        add_edge(cond, body, EdgeKind::True);
        add_edge(cond, exit, EdgeKind::False);
        cur_ = exit;
    }

    static bool ends_with_transfer(const std::vector<const Stmt*>& stmts) {
        if (stmts.empty()) return false;
        const auto k = stmts.back()->kind;
        return k == Stmt::Kind::Break || k == Stmt::Kind::Return || k == Stmt::Kind::Goto ||
               k == Stmt::Kind::Continue;
    }

    void lower_switch(const Stmt& s) {
        struct Arm {
            std::vector<std::string> labels;
            bool has_default = false;
            std::vector<const Stmt*> body;
        };
        std::vector<Arm> arms;
        std::vector<const Stmt*> flat;
        if (s.kids[0].kind == Stmt::Kind::Compound) {
            for (const auto& k : s.kids[0].kids) flat.push_back(&k);
        } else {
            flat.push_back(&s.kids[0]);
        }
        bool prev_label = false;
        for (const Stmt* k : flat) {
            const bool is_label = k->kind == Stmt::Kind::Case || k->kind == Stmt::Kind::Default;
            if (is_label) {
                if (!prev_label || arms.empty()) arms.emplace_back();
                if (k->kind == Stmt::Kind::Case) {
                    arms.back().labels.push_back(k->text);
                } else {
                    arms.back().has_default = true;
                }
            } else if (!arms.empty()) {
                arms.back().body.push_back(k);
            }
            prev_label = is_label;
        }

        const std::string subject = s.text;
        auto label_cond = [&](const std::string& v) {
            return normalize_condition(subject_paren(subject) + " == " + v);
        };

        // Effective arm condition: own labels plus those of arms falling into it.
        std::vector<std::string> conds(arms.size());
        std::vector<bool> reachable_by_default(arms.size(), false);
        {
            std::vector<std::string> carried;
            bool carried_default = false;
            for (std::size_t a = 0; a < arms.size(); ++a) {
                std::vector<std::string> labels = carried;
                bool dflt = carried_default || arms[a].has_default;
                for (const auto& l : arms[a].labels) labels.push_back(label_cond(l));
                if (!dflt && !labels.empty()) {
                    std::string text;
                    for (std::size_t i = 0; i < labels.size(); ++i) text += (i ? " || " : "") + labels[i];
                    conds[a] = normalize_condition(text);
                }
                reachable_by_default[a] = dflt;
                if (ends_with_transfer(arms[a].body)) {
                    carried.clear();
                    carried_default = false;
                } else {
                    for (const auto& l : arms[a].labels) carried.push_back(label_cond(l));
                    carried_default = dflt;
                }
            }
        }

        const auto saved = nesting_;
        const std::size_t exit = new_block(saved);
        std::vector<std::size_t> arm_blocks(arms.size(), kNone);
        std::vector<std::size_t> arm_conds(arms.size(), kNone);
        std::size_t dispatch = cond_block();
        bool first = true;
        // Dispatch chain over arms that carry a condition, in source order.
        for (std::size_t a = 0; a < arms.size(); ++a) {
            if (conds[a].empty()) continue;
            if (!first) {
                const std::size_t nb = new_block(saved);
                add_edge(dispatch, nb, EdgeKind::False);
                dispatch = nb;
            }
            const std::size_t c = add_cond(first ? CondKind::Switch : CondKind::ElseIf, conds[a], s.line, dispatch);
            first = false;
            arm_conds[a] = c;
            auto nest = saved;
            nest.push_back({c, true});
            arm_blocks[a] = new_block(nest);
            add_edge(dispatch, arm_blocks[a], EdgeKind::True);
        }
        std::size_t default_arm = kNone;
        for (std::size_t a = 0; a < arms.size(); ++a) {
            if (arms[a].has_default) default_arm = a;
            if (arm_blocks[a] == kNone) arm_blocks[a] = new_block(saved);
        }
        if (first) {
            // No conditional arms: only a default (or nothing).
            if (default_arm != kNone) {
                add_edge(dispatch, arm_blocks[default_arm], EdgeKind::Fallthrough);
            } else {
                add_edge(dispatch, exit, EdgeKind::Fallthrough);
            }
        } else {
            add_edge(dispatch, default_arm != kNone ? arm_blocks[default_arm] : exit, EdgeKind::False);
        }

        loops_.push_back({exit, kNone, true});
        for (std::size_t a = 0; a < arms.size(); ++a) {
            nesting_ = cfg_.blocks[arm_blocks[a]].nesting;
            if (cur_ != kNone && a > 0) add_edge(cur_, arm_blocks[a], EdgeKind::Fallthrough);
            cur_ = arm_blocks[a];
            for (const Stmt* st : arms[a].body) lower(*st);
        }
        if (cur_ != kNone) add_edge(cur_, exit, EdgeKind::Fallthrough);
        loops_.pop_back();
        nesting_ = saved;
        cur_ = exit;
    }

    static std::string subject_paren(const std::string& subject) {
        try {
            const auto e = parse_c_expr(subject);
            if (is_access_path(*e) || e->kind == ExprKind::Call) return subject;
        } catch (const Error&) {
        }
        return "(" + subject + ")";
    }

    void lower(const Stmt& s) {
        switch (s.kind) {
            case Stmt::Kind::Compound:
                for (const auto& k : s.kids) lower(k);
                return;
            case Stmt::Kind::Simple:
                if (!s.text.empty()) {
                    cfg_.blocks[current()].stmts.push_back(CfgStatement{s.line, s.last_line, s.text, StmtRole::Plain});
                }
                return;
            case Stmt::Kind::If: lower_if(s, CondKind::If); return;
            case Stmt::Kind::While:
            case Stmt::Kind::For: lower_loop(s); return;
            case Stmt::Kind::DoWhile: lower_do_while(s); return;
            case Stmt::Kind::Switch: lower_switch(s); return;
            case Stmt::Kind::Return: add_jump(JumpKind::Return, s, cfg_.exit, true, true); return;
            case Stmt::Kind::Goto: add_jump(JumpKind::Goto, s, 0, false, true); return;
            case Stmt::Kind::Break:
            case Stmt::Kind::Continue: {
                const bool is_break = s.kind == Stmt::Kind::Break;
                const LoopCtx* ctx = nullptr;
                for (auto it = loops_.rbegin(); it != loops_.rend(); ++it) {
                    if (is_break || !it->is_switch) {
                        ctx = &*it;
                        break;
                    }
                }
                if (ctx == nullptr) {
                    throw Error(ErrorCode::ParseError, cfg_.function.file + ":" + std::to_string(s.line) + ": " +
                                                           s.text + " outside of a loop");
                }
                const bool in_switch = is_break && ctx->is_switch;
                add_jump(is_break ? JumpKind::Break : JumpKind::Continue, s,
                         is_break ? ctx->break_target : ctx->continue_target, true, !in_switch);
                return;
            }
            case Stmt::Kind::Label: {
                const std::size_t lb = new_block(nesting_);
                if (cur_ != kNone) add_edge(cur_, lb, EdgeKind::Fallthrough);
                cfg_.blocks[lb].stmts.push_back(CfgStatement{s.line, s.line, s.text + ":", StmtRole::Label});
                labels_[s.text] = lb;
                cur_ = lb;
                for (const auto& k : s.kids) lower(k);
                return;
            }
            case Stmt::Kind::Case:
            case Stmt::Kind::Default:
                // Labels outside a switch body's top level are treated as plain statements.
                return;
        }
    }

    void finish() {
        // Back edges: edges closing a cycle in a DFS from the entry.
        const std::size_t n = cfg_.blocks.size();
        std::vector<std::vector<std::size_t>> out(n);
        for (std::size_t e = 0; e < cfg_.edges.size(); ++e) out[cfg_.edges[e].from].push_back(e);
        std::vector<int> state(n, 0);
        std::vector<std::pair<std::size_t, std::size_t>> stack;
        stack.emplace_back(cfg_.entry, 0);
        state[cfg_.entry] = 1;
        while (!stack.empty()) {
            auto& [b, i] = stack.back();
            if (i < out[b].size()) {
                const std::size_t e = out[b][i++];
                const std::size_t to = cfg_.edges[e].to;
                if (state[to] == 1) {
                    cfg_.edges[e].back = true;
                } else if (state[to] == 0) {
                    state[to] = 1;
                    stack.emplace_back(to, 0);
                }
            } else {
                state[b] = 2;
                stack.pop_back();
            }
        }
        for (std::size_t b = 0; b < n; ++b) cfg_.blocks[b].dead = state[b] == 0;
    }

    FunctionCfg& cfg_;
    std::size_t cur_ = kNone;
    std::vector<NestEntry> nesting_;
    std::vector<LoopCtx> loops_;
    std::map<std::string, std::size_t> labels_;
    std::vector<std::pair<std::size_t, std::string>> pending_gotos_;
};

}  // namespace

std::vector<std::size_t> FunctionCfg::forward_successors(std::size_t block) const {
    std::vector<std::size_t> out;
    for (const auto& e : edges) {
        if (e.from == block && !e.back) out.push_back(e.to);
    }
    return out;
}

std::vector<const CfgEdge*> FunctionCfg::out_edges(std::size_t block) const {
    std::vector<const CfgEdge*> out;
    for (const auto& e : edges) {
        if (e.from == block) out.push_back(&e);
    }
    return out;
}

std::optional<CfgPosition> FunctionCfg::locate(int line) const {
    std::optional<CfgPosition> dead_match;
    for (const auto& b : blocks) {
        for (std::size_t i = 0; i < b.stmts.size(); ++i) {
            const auto& st = b.stmts[i];
            if (st.line <= line && line <= st.last_line) {
                if (!b.dead) return CfgPosition{b.id, i};
                if (!dead_match) dead_match = CfgPosition{b.id, i};
            }
        }
    }
    return dead_match;
}

FunctionCfg build_cfg(const FunctionDef& def) {
    if (def.is_macro) throw Error(ErrorCode::ParseError, def.file + ": " + def.name + " is a macro, not a function");
    const auto toks = lex_c(def.text, def.begin_line);
    std::size_t open = toks.size();
    int depth = 0;
    for (std::size_t k = 0; k < toks.size(); ++k) {
        if (toks[k].is("(")) ++depth;
        if (toks[k].is(")")) --depth;
        if (depth == 0 && toks[k].is("{")) {
            open = k;
            break;
        }
    }
    if (open == toks.size()) {
        throw Error(ErrorCode::ParseError, def.file + ":" + std::to_string(def.begin_line) + ": no function body");
    }
    FunctionCfg cfg;
    cfg.function = def.ref();
    StmtParser parser(toks, def.file);
    const Stmt body = parser.parse_body(open);
    Lowering lowering(cfg);
    lowering.run(body);
    return cfg;
}

}  // namespace pfa
