// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "corpus.hpp"
#include "fpe_oracle.hpp"
#include "helpers.hpp"

namespace pfa {
namespace {

using testing::cfg_of;
using testing::def_of;

void write(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p) << text;
}

TEST(Index, EnumeratesDefinitions) {
    CodeIndex index(".");
    index.add_file("a.c", "int foo(int a)\n{\n\treturn a;\n}\n\nstatic void bar(void)\n{\n}\n");
    EXPECT_EQ(index.function_count(), 2u);
    const auto& foo = index.functions().at("foo").at(0);
    EXPECT_EQ(foo.begin_line, 1);
    EXPECT_EQ(foo.body_line, 2);
    EXPECT_EQ(foo.end_line, 4);
    EXPECT_EQ(foo.params, std::vector<std::string>{"a"});
    EXPECT_EQ(index.enclosing("a.c", 3)->name, "foo");
    EXPECT_EQ(index.enclosing("a.c", 5), nullptr);
}

TEST(Index, DuplicateStaticDefinitionsAndHint) {
    const auto root = testing::scratch_dir("dup");
    write(root / "a.c", "static int init(void)\n{\n\treturn 1;\n}\n");
    write(root / "b.c", "static int init(void)\n{\n\treturn 2;\n}\n");
    const CodeIndex index = build_index(root);
    EXPECT_EQ(index.functions().at("init").size(), 2u);
    EXPECT_EQ(retrieve_function(index, "init", std::string("a.c")).file, "a.c");
    EXPECT_NE(retrieve_function(index, "init", std::string("b.c")).text.find("return 2"), std::string::npos);
    EXPECT_PFA_ERROR(retrieve_function(index, "init"), ErrorCode::Ambiguous);
    EXPECT_PFA_ERROR(retrieve_function(index, "nope"), ErrorCode::NotFound);
    std::filesystem::remove_all(root);
}

TEST(Index, HeadersWithPrototypesOnlyAreEmpty) {
    const auto root = testing::scratch_dir("hdr");
    write(root / "x.h", "int foo(int a);\nvoid bar(void);\n");
    EXPECT_PFA_ERROR(build_index(root), ErrorCode::EmptyIndex);
    std::filesystem::remove_all(root);
}

TEST(Index, ExcludeGlobs) {
    const auto root = testing::scratch_dir("excl");
    write(root / "keep.c", "void k(void)\n{\n}\n");
    write(root / "gen/skip.c", "void s(void)\n{\n}\n");
    IndexOptions opts;
    opts.exclude_globs = {"gen/*"};
    const CodeIndex index = build_index(root, opts);
    EXPECT_TRUE(index.functions().contains("k"));
    EXPECT_FALSE(index.functions().contains("s"));
    std::filesystem::remove_all(root);
}

TEST(Index, CacheRoundTrip) {
    const auto root = testing::scratch_dir("cache");
    write(root / "a.c", "int foo(int a)\n{\n\treturn a;\n}\n");
    IndexOptions opts;
    opts.cache_path = root / "index-cache.json";
    const CodeIndex first = build_index(root, opts);
    ASSERT_TRUE(std::filesystem::exists(*opts.cache_path));
    const CodeIndex second = build_index(root, opts);
    EXPECT_EQ(first.functions(), second.functions());
    write(root / "a.c", "int foo(int a)\n{\n\treturn a;\n}\nint baz(void)\n{\n\treturn 0;\n}\n");
    EXPECT_EQ(build_index(root, opts).function_count(), 2u);
    std::filesystem::remove_all(root);
}

TEST(Index, FunctionLikeMacrosAreRetrievable) {
    CodeIndex index(".");
    index.add_file("m.h", "#define DEV_OK(d) ((d) && (d)->up)\nint use(int x)\n{\n\treturn x;\n}\n");
    const FunctionDef m = retrieve_function(index, "DEV_OK");
    EXPECT_TRUE(m.is_macro);
    EXPECT_NE(m.text.find("(d)->up"), std::string::npos);
    EXPECT_FALSE(retrieve_function(index, "use").is_macro);
}

TEST(Index, RetrievesSkbUnrefFromFixture) {
    const auto& c = testing::corpus();
    const FunctionDef d = retrieve_function(c.index, "skb_unref");
    EXPECT_EQ(d.file, "net/skbuff.c");
    EXPECT_NE(d.text.find("skb_unref"), std::string::npos);
}

TEST(Cfg, SingleReturn) {
    const FunctionCfg cfg = cfg_of("int f(void)\n{ return 0; }\n", "f");
    std::size_t body_blocks = 0;
    for (const auto& b : cfg.blocks) body_blocks += b.id != cfg.exit;
    EXPECT_EQ(body_blocks, 1u);
    EXPECT_TRUE(cfg.cond_nodes.empty());
    ASSERT_EQ(cfg.jump_nodes.size(), 1u);
    EXPECT_EQ(cfg.jump_nodes[0].kind, JumpKind::Return);
    EXPECT_TRUE(cfg.blocks[cfg.exit].stmts.empty());
}

TEST(Cfg, GuardedReturn) {
    const FunctionCfg cfg = cfg_of("int g(int *p)\n{\n\tif (!p)\n\t\treturn -1;\n\tuse(p);\n}\n", "g");
    ASSERT_EQ(cfg.cond_nodes.size(), 1u);
    EXPECT_EQ(cfg.cond_nodes[0].kind, CondKind::If);
    EXPECT_EQ(cfg.cond_nodes[0].condition, "!p");
    ASSERT_EQ(cfg.jump_nodes.size(), 1u);
    EXPECT_EQ(cfg.jump_nodes[0].kind, JumpKind::Return);
    EXPECT_EQ(cfg.jump_nodes[0].guarding_conds, (std::vector<NestEntry>{{0, true}}));
}

TEST(Cfg, TunnelXmitNesting) {
    const auto& c = testing::corpus();
    const FunctionCfg cfg = build_cfg(retrieve_function(c.index, "ip_tunnel_xmit"));
    auto find = [&](const std::string& text) -> const CondNode& {
        for (const auto& n : cfg.cond_nodes) {
            if (n.condition == text) return n;
        }
        throw std::runtime_error("missing " + text);
    };
    const CondNode& outer = find("dst == 0");
    const CondNode& tun = find("tun_info");
    const CondNode& cm = find("connected && md");
    EXPECT_TRUE(outer.nesting_path.empty());
    ASSERT_EQ(tun.nesting_path.size(), 1u);
    EXPECT_EQ(cfg.cond_nodes[tun.nesting_path[0].cond].condition, "dst == 0");
    EXPECT_TRUE(tun.nesting_path[0].arm);
    EXPECT_TRUE(cm.nesting_path.empty());
    EXPECT_LT(tun.line, cm.line);
}

TEST(Cfg, SwitchBecomesElseIfChain) {
    const FunctionCfg cfg = cfg_of(
        "void s(int x)\n{\n\tswitch (x) {\n\tcase 1:\n\tcase 2:\n\t\ta();\n\t\tbreak;\n\tcase 3:\n\t\treturn;\n"
        "\tdefault:\n\t\tb();\n\t}\n\tc();\n}\n",
        "s");
    ASSERT_EQ(cfg.cond_nodes.size(), 2u);
    EXPECT_EQ(cfg.cond_nodes[0].kind, CondKind::Switch);
    EXPECT_EQ(cfg.cond_nodes[0].condition, "x == 1 || x == 2");
    EXPECT_EQ(cfg.cond_nodes[1].kind, CondKind::ElseIf);
    EXPECT_EQ(cfg.cond_nodes[1].condition, "x == 3");
    ASSERT_EQ(cfg.jump_nodes.size(), 1u);
    EXPECT_EQ(cfg.jump_nodes[0].kind, JumpKind::Return);
}

TEST(Cfg, CompoundConditionStaysWhole) {
    const FunctionCfg cfg = cfg_of("void h(int a, int b)\n{\n\tif (a && (b || !a))\n\t\tx();\n}\n", "h");
    ASSERT_EQ(cfg.cond_nodes.size(), 1u);
    EXPECT_EQ(cfg.cond_nodes[0].condition, "a && (b || !a)");
}

TEST(Cfg, LoopsRecordBackEdges) {
    const FunctionCfg cfg = cfg_of(
        "void l(int n)\n{\n\twhile (n > 0) {\n\t\tif (n == 3)\n\t\t\tbreak;\n\t\tn--;\n\t}\n"
        "\tdo {\n\t\tn++;\n\t} while (n < 5);\n}\n",
        "l");
    std::size_t back = 0;
    for (const auto& e : cfg.edges) back += e.back;
    EXPECT_EQ(back, 2u);
    ASSERT_EQ(cfg.cond_nodes.size(), 3u);
    EXPECT_EQ(cfg.cond_nodes[0].kind, CondKind::While);
    EXPECT_TRUE(cfg.cond_nodes[2].forced_entry);
}

TEST(Cfg, ComputedGotoIsRejected) {
    EXPECT_PFA_ERROR(cfg_of("void c(void *t)\n{\n\tgoto *t;\n}\n", "c"), ErrorCode::ParseError);
}

TEST(Cfg, Deterministic) {
    const auto& c = testing::corpus();
    for (const auto& [name, defs] : c.index.functions()) {
        for (const auto& def : defs) {
            if (def.is_macro) continue;
            const FunctionCfg a = build_cfg(def);
            const FunctionCfg b = build_cfg(def);
            ASSERT_EQ(a.blocks.size(), b.blocks.size()) << name;
            ASSERT_EQ(a.edges.size(), b.edges.size()) << name;
            for (std::size_t i = 0; i < a.edges.size(); ++i) {
                EXPECT_EQ(a.edges[i].from, b.edges[i].from);
                EXPECT_EQ(a.edges[i].to, b.edges[i].to);
            }
            ASSERT_EQ(a.cond_nodes.size(), b.cond_nodes.size());
            for (std::size_t i = 0; i < a.cond_nodes.size(); ++i) {
                EXPECT_EQ(a.cond_nodes[i].condition, b.cond_nodes[i].condition);
            }
        }
    }
}

// Paths from the entry block to the exit, counted by brute force.
std::size_t count_paths(const FunctionCfg& cfg, std::size_t from) {
    if (from == cfg.exit) return 1;
    std::size_t n = 0;
    for (std::size_t next : cfg.forward_successors(from)) n += count_paths(cfg, next);
    return n;
}

TEST(CfgProperty, IndependentBranchesGiveTwoToTheNPaths) {
    for (int n = 0; n <= 8; ++n) {
        std::string src = "void f(void)\n{\n";
        for (int i = 0; i < n; ++i) src += "\tif (c" + std::to_string(i) + ")\n\t\tstep();\n";
        src += "\tdone();\n}\n";
        EXPECT_EQ(count_paths(cfg_of(src, "f"), 0), std::size_t{1} << n) << n << " branches";
    }
}

// (cond, arm) pairs present on every entry-to-block path, by enumeration.
std::set<std::pair<std::size_t, bool>> common_guards(const FunctionCfg& cfg, std::size_t target) {
    std::optional<std::set<std::pair<std::size_t, bool>>> common;
    std::vector<std::pair<std::size_t, bool>> cur;
    std::function<void(std::size_t)> walk = [&](std::size_t b) {
        if (b == target) {
            std::set<std::pair<std::size_t, bool>> here(cur.begin(), cur.end());
            if (!common) {
                common = here;
            } else {
                std::set<std::pair<std::size_t, bool>> keep;
                for (const auto& x : *common) {
                    if (here.contains(x)) keep.insert(x);
                }
                common = keep;
            }
            return;
        }
        for (const CfgEdge* e : cfg.out_edges(b)) {
            if (e->back) continue;
            const bool branch = e->kind == EdgeKind::True || e->kind == EdgeKind::False;
            if (branch) cur.emplace_back(*cfg.blocks[b].cond, e->kind == EdgeKind::True);
            walk(e->to);
            if (branch) cur.pop_back();
        }
    };
    walk(cfg.entry);
    return common.value_or(std::set<std::pair<std::size_t, bool>>{});
}

TEST(CfgProperty, JumpGuardsAreTheConditionsOnEveryPath) {
    const auto fns = testing::load_marked_corpus(testing::fixtures_dir() / "fpe" / "corpus.c");
    std::size_t checked = 0;
    for (const auto& fn : fns) {
        const FunctionCfg cfg = build_cfg(fn.def);
        for (const auto& j : cfg.jump_nodes) {
            if (cfg.blocks[j.block].dead) continue;
            std::set<std::pair<std::size_t, bool>> guards;
            for (const auto& g : j.guarding_conds) guards.emplace(g.cond, g.arm);
            const auto common = common_guards(cfg, j.block);
            for (const auto& g : guards) {
                EXPECT_TRUE(common.contains(g)) << fn.def.name << " line " << j.line << " guard " << g.first;
            }
            // Conditions passed on every path but not enclosing the jump are
            // earlier exits: their other arm holds a jump of its own.
            for (const auto& [cond, arm] : common) {
                if (guards.contains({cond, arm})) continue;
                bool exits = false;
                for (const auto& other : cfg.jump_nodes) {
                    for (const auto& g : other.guarding_conds) exits = exits || (g.cond == cond && g.arm != arm);
                }
                EXPECT_TRUE(exits) << fn.def.name << " line " << j.line << " cond " << cond;
            }
            ++checked;
        }
    }
    EXPECT_GT(checked, 30u);
}

}  // namespace
}  // namespace pfa
