// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <chrono>
#include <fstream>
#include <thread>

#include <gtest/gtest.h>

#include "corpus.hpp"
#include "helpers.hpp"
#include "pfa/cexpr.hpp"
#include "pfa/expert.hpp"
#include "pfa/range.hpp"

namespace pfa {
namespace {

using testing::corpus;
using testing::def_of;
using testing::scratch_dir;

SymbolicRange interval(const std::string& s, std::optional<std::int64_t> lo, std::optional<std::int64_t> hi) {
    SymbolicRange r = SymbolicRange::unknown_variable(s);
    r.kind = RangeKind::Interval;
    r.low = lo;
    r.high = hi;
    r.confidence = Confidence::Definite;
    return r;
}

SymbolicRange boolean(const std::string& s, bool v) {
    SymbolicRange r = SymbolicRange::unknown_variable(s);
    r.kind = RangeKind::Boolean;
    r.bool_value = v;
    r.confidence = Confidence::Definite;
    return r;
}

std::string answer(const SymbolicRange& r) { return "Step 1: looked.\n" + render_range_block(r); }

CallInfo call_in(const FunctionDef& def, const std::string& callee) {
    const auto& idx = corpus().index;
    for (int line = def.begin_line; line <= def.end_line; ++line) {
        if (auto c = call_on_line(idx.line_text(def.file, line), callee)) return *c;
    }
    throw std::runtime_error("no call to " + callee + " in " + def.name);
}

InitialStates p_of(std::vector<std::string> assumptions) {
    InitialStates p;
    p.assumptions = std::move(assumptions);
    return p;
}

TEST(ParseRangeAnswer, Kinds) {
    auto parse = [](const std::string& block) { return parse_range_answer("analysis\n```range\n" + block + "```\n"); };

    auto a = parse("subject: n\nkind: interval\nlow: -2\nhigh: 5\nconfidence: definite\n");
    ASSERT_TRUE(a.range) << a.problem;
    EXPECT_EQ(a.range->kind, RangeKind::Interval);
    EXPECT_EQ(a.range->low, -2);
    EXPECT_EQ(a.range->high, 5);
    EXPECT_EQ(a.range->confidence, Confidence::Definite);

    a = parse("kind: interval\nlow: -inf\nhigh: 0x10\n");
    ASSERT_TRUE(a.range) << a.problem;
    EXPECT_FALSE(a.range->low);
    EXPECT_EQ(a.range->high, 16);
    EXPECT_EQ(a.range->confidence, Confidence::Assumed);

    a = parse("Kind: BOOL\nvalue: False\n");
    ASSERT_TRUE(a.range) << a.problem;
    EXPECT_EQ(a.range->kind, RangeKind::Boolean);
    EXPECT_FALSE(a.range->bool_value);

    a = parse("kind: null\nvalue: non-null\n");
    ASSERT_TRUE(a.range) << a.problem;
    EXPECT_EQ(a.range->null_state, NullState::NonNull);

    a = parse("kind: predicate\nvalue: ret < 0 || ret == 4\n");
    ASSERT_TRUE(a.range) << a.problem;
    EXPECT_EQ(a.range->predicate, "ret < 0 || ret == 4");

    a = parse("kind: unknown\nconfidence: definite\n");
    ASSERT_TRUE(a.range) << a.problem;
    EXPECT_TRUE(a.range->is_unknown());
    EXPECT_EQ(a.range->confidence, Confidence::Unknown);
}

TEST(ParseRangeAnswer, SchemaViolations) {
    auto problem = [](const std::string& text) {
        const auto a = parse_range_answer(text);
        EXPECT_FALSE(a.range) << text;
        EXPECT_FALSE(a.need_context) << text;
        return a.problem;
    };
    EXPECT_NE(problem("the range is 0"), "");
    EXPECT_NE(problem("```range\nlow: 1\n```"), "");
    EXPECT_NE(problem("```range\nkind: interval\nlow: 5\nhigh: 1\n```"), "");
    EXPECT_NE(problem("```range\nkind: interval\nlow: one\nhigh: 1\n```"), "");
    EXPECT_NE(problem("```range\nkind: bool\nvalue: maybe\n```"), "");
    EXPECT_NE(problem("```range\nkind: null\n```"), "");
    EXPECT_NE(problem("```range\nkind: predicate\n```"), "");
    EXPECT_NE(problem("```range\nkind: sometimes\n```"), "");
    EXPECT_NE(problem("```range\nkind: bool\njust words\n```"), "");
}

TEST(ParseRangeAnswer, NeedContextMarker) {
    auto a = parse_range_answer("I need the body.\nNEED_CONTEXT: dev_get_stats\n");
    ASSERT_TRUE(a.need_context);
    EXPECT_EQ(*a.need_context, "dev_get_stats");
    EXPECT_FALSE(a.range);

    // A range block wins over a stray marker.
    a = parse_range_answer("NEED_CONTEXT: f\n```range\nkind: bool\nvalue: true\n```");
    EXPECT_TRUE(a.range);
    EXPECT_FALSE(a.need_context);

    EXPECT_FALSE(parse_range_answer("text NEED_CONTEXT: f").need_context);
}

TEST(RangeBlock, RenderParseRoundTrip) {
    std::vector<SymbolicRange> cases = {interval("n", -3, 7), interval("n", std::nullopt, 0),
                                        interval("n", 1, std::nullopt), boolean("ok", true), boolean("ok", false)};
    SymbolicRange null_r = SymbolicRange::unknown_variable("p");
    null_r.kind = RangeKind::NullState;
    null_r.null_state = NullState::Null;
    null_r.confidence = Confidence::Assumed;
    cases.push_back(null_r);
    SymbolicRange pred = SymbolicRange::unknown_variable("r");
    pred.kind = RangeKind::Predicate;
    pred.predicate = "r != 0";
    pred.confidence = Confidence::Definite;
    cases.push_back(pred);
    cases.push_back(SymbolicRange::unknown_variable("u"));

    for (const auto& r : cases) {
        const auto parsed = parse_range_answer(answer(r));
        ASSERT_TRUE(parsed.range) << render_range_block(r) << parsed.problem;
        EXPECT_EQ(*parsed.range, r) << render_range_block(r);
        EXPECT_EQ(symbolic_range_from_json(to_json(r)), r);
    }
}

TEST(RangeJson, CallReturnAndConstraintRoundTrip) {
    SymbolicRange r = SymbolicRange::unknown_call(CallInfo{"skb_unref", {"skb"}, "skb_unref(skb)"});
    r.kind = RangeKind::Boolean;
    r.confidence = Confidence::Definite;
    EXPECT_EQ(symbolic_range_from_json(to_json(r)), r);
    EXPECT_EQ(r.describe(), "skb_unref(skb): false");
    EXPECT_EQ(interval("len", 0, 16).describe(), "len: [0, 16]");

    FeasiblePathConstraint c{ConditionExpr{"!skb_unref(skb)", {Literal{0, "!skb_unref(skb)", true}}},
                             Polarity::MustNotFullyHold,
                             {r}};
    EXPECT_EQ(constraint_from_json(to_json(c)), c);
    EXPECT_EQ(c.asserted_text(), "skb_unref(skb)");
}

TEST(RangeFromP, NullForms) {
    auto state = [](const std::string& a, const std::string& subject) {
        const auto r = range_from_p(p_of({a}), subject);
        return r ? std::optional(r->null_state) : std::nullopt;
    };
    EXPECT_EQ(state("skb == NULL", "skb"), NullState::Null);
    EXPECT_EQ(state("NULL == skb", "skb"), NullState::Null);
    EXPECT_EQ(state("!skb", "skb"), NullState::Null);
    EXPECT_EQ(state("skb != NULL", "skb"), NullState::NonNull);
    EXPECT_EQ(state("skb", "skb"), NullState::NonNull);
    EXPECT_EQ(state("dev->priv == NULL", "dev->priv"), NullState::Null);
    EXPECT_EQ(state("skb == NULL", "dev"), std::nullopt);
    EXPECT_EQ(state("x > 3", "x"), std::nullopt);
}

TEST(RangeFromP, PropagatedRangesAreAssumed) {
    InitialStates p;
    p.propagated.push_back(FeasiblePathConstraint{ConditionExpr{"len > 4", {}}, Polarity::MustHold, {interval("len", 5, std::nullopt)}});
    const auto r = range_from_p(p, "len");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->low, 5);
    EXPECT_EQ(r->confidence, Confidence::Assumed);
    EXPECT_EQ(p.render(), "len > 4");
    EXPECT_EQ(InitialStates{}.render(), "no assumptions");
}

TEST(CanonicalP, RenamesArgumentsAndDropsUnrelatedPredicates) {
    const CallInfo call{"validate", {"dev"}, "validate(dev)"};
    EXPECT_EQ(canonical_p(p_of({"dev == NULL", "unrelated > 3"}), call), "arg0 == NULL");
    EXPECT_EQ(canonical_p(p_of({"unrelated > 3"}), call), "true");

    const CallInfo other{"validate", {"d2"}, "validate(d2)"};
    EXPECT_EQ(canonical_p(p_of({"d2 == NULL"}), other), canonical_p(p_of({"dev == NULL"}), call));

    // Order of P does not matter; free identifiers become v0, v1, ...
    const CallInfo two{"f", {"a", "b"}, "f(a, b)"};
    const auto k1 = canonical_p(p_of({"b > lim", "a == NULL"}), two);
    const auto k2 = canonical_p(p_of({"a == NULL", "b > cap"}), two);
    EXPECT_EQ(k1, k2);
    EXPECT_NE(k1.find("v0"), std::string::npos) << k1;
    EXPECT_EQ(k1.find("lim"), std::string::npos) << k1;
}

TEST(CanonicalP, MemoryKeyDependsOnCalleeFileAndState) {
    const FunctionRef a{"validate", "a.c"};
    const FunctionRef b{"validate", "b.c"};
    EXPECT_EQ(memory_key(a, "arg0 == NULL"), memory_key(a, "arg0 == NULL"));
    EXPECT_NE(memory_key(a, "arg0 == NULL"), memory_key(b, "arg0 == NULL"));
    EXPECT_NE(memory_key(a, "arg0 == NULL"), memory_key(a, "arg0 != NULL"));
}

TEST(RenamePaths, WholePathsOnly) {
    EXPECT_EQ(rename_paths("p->x + pp > p", {{"p", "q"}}), "q->x + pp > q");
    EXPECT_EQ(rename_paths("dev->flags & IFF_UP", {{"dev->flags", "f"}}), "f & IFF_UP");
    EXPECT_EQ(rename_paths("f(p)", {{"f", "g"}, {"p", "q"}}), "f(q)");
    EXPECT_EQ(rename_paths("a +", {{"a", "b"}}), "a +");
}

MemoryStore::Entry entry_of(const std::string& callee, SymbolicRange v) {
    return MemoryStore::Entry{"", callee, "x.c", "arg0 == NULL", std::move(v), "llm/x.json"};
}

TEST(MemoryStore, SingleFlightUnderConcurrency) {
    MemoryStore store;
    std::atomic<int> computed{0};
    std::atomic<int> hits{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&] {
            bool hit = false;
            const auto r = store.get_or_compute(
                "k",
                [&] {
                    ++computed;
                    std::this_thread::sleep_for(std::chrono::milliseconds(50));
                    return entry_of("f", boolean("f(x)", true));
                },
                &hit);
            EXPECT_TRUE(r.bool_value);
            if (hit) ++hits;
        });
    }
    for (auto& t : threads) t.join();
    EXPECT_EQ(computed, 1);
    EXPECT_EQ(hits, 7);
    EXPECT_EQ(store.size(), 1u);
    ASSERT_TRUE(store.lookup("k"));
    EXPECT_EQ(store.lookup("k")->key, "k");
}

TEST(MemoryStore, FailedComputationIsNotCached) {
    MemoryStore store;
    EXPECT_PFA_ERROR(store.get_or_compute("k", []() -> MemoryStore::Entry {
        throw Error(ErrorCode::BackendError, "down");
    }),
                     ErrorCode::BackendError);
    EXPECT_EQ(store.size(), 0u);
    bool hit = true;
    store.get_or_compute("k", [] { return entry_of("f", boolean("f(x)", false)); }, &hit);
    EXPECT_FALSE(hit);
    EXPECT_EQ(store.size(), 1u);
}

TEST(MemoryStore, WaiterRetriesAfterOwnerFails) {
    MemoryStore store;
    std::atomic<bool> owner_started{false};
    std::thread owner([&] {
        try {
            store.get_or_compute("k", [&]() -> MemoryStore::Entry {
                owner_started = true;
                std::this_thread::sleep_for(std::chrono::milliseconds(100));
                throw Error(ErrorCode::BudgetExhausted, "owner out of budget");
            });
        } catch (const Error&) {
        }
    });
    while (!owner_started) std::this_thread::yield();
    bool hit = true;
    const auto r = store.get_or_compute("k", [] { return entry_of("f", boolean("f(x)", true)); }, &hit);
    owner.join();
    EXPECT_TRUE(r.bool_value);
    EXPECT_FALSE(hit);
    EXPECT_EQ(store.size(), 1u);
}

TEST(MemoryStore, SaveLoadRoundTrip) {
    MemoryStore store;
    store.get_or_compute("k1", [] { return entry_of("f", boolean("f(x)", false)); });
    store.get_or_compute("k2", [] { return entry_of("g", interval("g(y)", 0, 0)); });
    const auto file = scratch_dir("memory") / "sub" / "memory.json";
    store.save(file);

    MemoryStore back;
    back.load(file);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back.lookup("k2")->value, interval("g(y)", 0, 0));
    EXPECT_EQ(back.lookup("k1")->callee, "f");
    bool hit = false;
    back.get_or_compute("k1", []() -> MemoryStore::Entry { throw std::logic_error("must not run"); }, &hit);
    EXPECT_TRUE(hit);

    MemoryStore empty;
    empty.load(file.parent_path() / "absent.json");
    EXPECT_EQ(empty.size(), 0u);
    std::ofstream(file) << "garbage";
    EXPECT_PFA_ERROR(empty.load(file), ErrorCode::ConfigError);
}

// Variable reasoning with the rule-driven responder on the corpus.
TEST(VariableRange, ConnectedFalseWhenTunInfoNull) {
    ScriptedBackend expert(expert_responder(corpus().rules()));
    const FunctionDef def = retrieve_function(corpus().index, "ip_tunnel_xmit");
    ReasonerStats stats;
    for (const std::string var : {"connected", "md"}) {
        const auto r = reason_variable_range(ConditionExpr{var, {}}, var, p_of({"tun_info == NULL"}), def, expert, &stats);
        EXPECT_EQ(r, [&] {
            SymbolicRange b = boolean(var, false);
            return b;
        }()) << r.describe();
    }
    EXPECT_EQ(stats.variable_prompts, 2u);
    EXPECT_FALSE(stats.degraded);
}

TEST(VariableRange, AnswerFromPNeedsNoPrompt) {
    ScriptedBackend never([](const PromptTemplate&, const Fills&) -> std::string { throw std::logic_error("called"); });
    const auto r = reason_variable_range(ConditionExpr{"!skb", {}}, "skb", p_of({"skb == NULL"}),
                                         def_of("void f(void *skb) { if (!skb) return; }", "f"), never);
    EXPECT_EQ(r.null_state, NullState::Null);
    EXPECT_EQ(never.total_calls(), 0u);
}

TEST(VariableRange, AssignedConstant) {
    const FunctionDef def = def_of("int f(void) { int x = 3; if (x > 2) return 1; return 0; }", "f");
    Fills seen;
    ScriptedBackend llm([&](const PromptTemplate&, const Fills& f) {
        seen = f;
        return answer(interval("x", 3, 3));
    });
    const auto r = reason_variable_range(ConditionExpr{"x > 2", {}}, "x", InitialStates{}, def, llm);
    EXPECT_EQ(r.low, 3);
    EXPECT_EQ(r.high, 3);
    EXPECT_EQ(r.subject, "x");
    EXPECT_EQ(seen.at("conditional_statement"), "x > 2");
    EXPECT_EQ(seen.at("initial_states"), "no assumptions");
    EXPECT_EQ(seen.at("function_name"), "f");
}

TEST(VariableRange, ReformatOnceThenUnknown) {
    const FunctionDef def = def_of("int f(int x) { if (x) return 1; return 0; }", "f");
    std::vector<std::string> feedback;
    ScriptedBackend llm([&](const PromptTemplate&, const Fills& f) {
        feedback.push_back(f.at("feedback"));
        return feedback.size() == 1 ? std::string("no idea") : answer(boolean("x", true));
    });
    ReasonerStats stats;
    EXPECT_EQ(reason_variable_range(ConditionExpr{"x", {}}, "x", {}, def, llm, &stats).kind, RangeKind::Boolean);
    ASSERT_EQ(feedback.size(), 2u);
    EXPECT_EQ(feedback[0], "");
    EXPECT_NE(feedback[1].find("missing ```range block"), std::string::npos) << feedback[1];

    ScriptedBackend bad([](const PromptTemplate&, const Fills&) { return std::string("still prose"); });
    stats = {};
    EXPECT_TRUE(reason_variable_range(ConditionExpr{"x", {}}, "x", {}, def, bad, &stats).is_unknown());
    EXPECT_EQ(bad.total_calls(), 2u);
    EXPECT_FALSE(stats.degraded);
    EXPECT_EQ(stats.diagnostics.size(), 1u);
}

TEST(VariableRange, BackendFailureDegradesToUnknown) {
    const FunctionDef def = def_of("int f(int x) { if (x) return 1; return 0; }", "f");
    ScriptedBackend down([](const PromptTemplate&, const Fills&) -> std::string {
        throw Error(ErrorCode::BackendError, "unavailable");
    });
    ReasonerStats stats;
    EXPECT_TRUE(reason_variable_range(ConditionExpr{"x", {}}, "x", {}, def, down, &stats).is_unknown());
    EXPECT_TRUE(stats.degraded);
}

TEST(CallRange, SkbUnrefFalseThenMemoryHit) {
    const auto& c = corpus();
    ScriptedBackend expert(expert_responder(c.rules()));
    const FunctionDef consume = retrieve_function(c.index, "consume_skb");
    const CallInfo call = call_in(consume, "skb_unref");
    MemoryStore memory;
    ReasonerStats stats;
    const auto r = reason_call_range(call, p_of({"skb == NULL"}), 0, memory, c.index, expert, {}, &stats, consume.file);
    EXPECT_EQ(r.kind, RangeKind::Boolean);
    EXPECT_FALSE(r.bool_value);
    EXPECT_EQ(r.subject, "skb_unref(skb)");
    EXPECT_EQ(r.subject_kind, SubjectKind::CallReturn);
    const auto calls = expert.total_calls();
    EXPECT_EQ(calls, 1u);
    EXPECT_EQ(memory.size(), 1u);

    const auto again = reason_call_range(call, p_of({"skb == NULL", "x > 0"}), 0, memory, c.index, expert, {}, &stats,
                                         consume.file);
    EXPECT_EQ(again, r);
    EXPECT_EQ(expert.total_calls(), calls);
    EXPECT_EQ(stats.memory_hits, 1u);
}

TEST(CallRange, FillsRestatePOverParameters) {
    const auto& c = corpus();
    const FunctionDef consume = retrieve_function(c.index, "consume_skb");
    CallInfo call = call_in(consume, "skb_unref");
    call.args = {"buf"};
    call.text = "skb_unref(buf)";
    Fills seen;
    ScriptedBackend llm([&](const PromptTemplate&, const Fills& f) {
        seen = f;
        return answer(boolean("skb_unref(buf)", false));
    });
    MemoryStore memory;
    reason_call_range(call, p_of({"buf == NULL", "unrelated"}), 0, memory, c.index, llm, {}, nullptr, consume.file);
    EXPECT_EQ(seen.at("initial_states"), "skb == NULL");
    EXPECT_EQ(seen.at("function_name"), "skb_unref");
    EXPECT_EQ(seen.at("call"), "skb_unref(buf)");
    EXPECT_EQ(seen.at("context"), "none");
}

TEST(CallRange, UnresolvableCalleeAndNoContextAreUnknownWithoutPrompts) {
    const auto& c = corpus();
    ScriptedBackend expert(expert_responder(c.rules()));
    MemoryStore memory;
    ReasonerStats stats;
    const CallInfo missing{"no_such_function", {"p"}, "no_such_function(p)"};
    EXPECT_TRUE(reason_call_range(missing, p_of({"p == NULL"}), 0, memory, c.index, expert, {}, &stats).is_unknown());
    EXPECT_EQ(stats.diagnostics.size(), 1u);
    EXPECT_FALSE(stats.degraded);

    ReasonerLimits off;
    off.no_context = true;
    const CallInfo call{"skb_unref", {"skb"}, "skb_unref(skb)"};
    EXPECT_TRUE(reason_call_range(call, p_of({"skb == NULL"}), 0, memory, c.index, expert, off, &stats).is_unknown());
    EXPECT_EQ(expert.total_calls(), 0u);
}

TEST(CallRange, DepthCapStopsTheWrapperChain) {
    const auto& c = corpus();
    const FunctionDef probe = retrieve_function(c.index, "probe_dev");
    const CallInfo call = call_in(probe, "w0");
    for (int cap = 1; cap <= 6; ++cap) {
        ScriptedBackend expert(expert_responder(c.rules()));
        MemoryStore memory;
        ReasonerStats stats;
        ReasonerLimits limits;
        limits.context_depth = cap;
        const auto r = reason_call_range(call, p_of({"dev == NULL"}), 0, memory, c.index, expert, limits, &stats,
                                         probe.file);
        EXPECT_EQ(stats.deepest_prompt, cap - 1) << cap;
        // w0..w5 is six levels deep. The wrappers only delegate, so w0 stays Unknown
        // either way; a cap of 6 lets w5 be prompted without hitting the cap.
        EXPECT_TRUE(r.is_unknown()) << cap;
        EXPECT_EQ(stats.depth_cap_hits, cap <= 5 ? 1u : 0u) << cap;
        EXPECT_LE(stats.call_prompts, static_cast<std::size_t>(2 * cap));
    }
}

TEST(CallRange, ToolCallLimitPerLevel) {
    const FunctionDef def = def_of("int g(int *p) { return h(p); }", "g", "lim.c");
    CodeIndex index(".");
    index.add_file("lim.c", def.text);
    ScriptedBackend llm([](const PromptTemplate&, const Fills&) { return std::string("NEED_CONTEXT: nowhere"); });
    MemoryStore memory;
    ReasonerStats stats;
    ReasonerLimits limits;
    limits.max_tool_calls = 2;
    const CallInfo call{"g", {"q"}, "g(q)"};
    EXPECT_TRUE(reason_call_range(call, p_of({"q == NULL"}), 0, memory, index, llm, limits, &stats).is_unknown());
    // Two tool calls, then one reformat request.
    EXPECT_EQ(stats.call_prompts, 4u);
    EXPECT_FALSE(stats.degraded);
}

TEST(CallRange, RecursionIsCut) {
    CodeIndex index(".");
    index.add_file("rec.c", "int r(int *p)\n{\n\tif (!p)\n\t\treturn r(p);\n\treturn 1;\n}\n");
    ScriptedBackend llm([](const PromptTemplate&, const Fills& f) {
        if (f.at("context") == "none") return std::string("NEED_CONTEXT: r");
        return answer(SymbolicRange::unknown_variable("r(p)"));
    });
    MemoryStore memory;
    ReasonerStats stats;
    const CallInfo call{"r", {"p"}, "r(p)"};
    EXPECT_TRUE(reason_call_range(call, p_of({"p == NULL"}), 0, memory, index, llm, {}, &stats).is_unknown());
    EXPECT_EQ(stats.deepest_prompt, 0);
}

TEST(CallRelevance, TargetAliasOrP) {
    ReasoningContext ctx;
    ctx.target_var = "skb";
    ctx.aliases = {"buf"};
    const auto p = p_of({"dev->flags > 0"});
    EXPECT_TRUE(call_is_relevant(CallInfo{"f", {"skb"}, "f(skb)"}, p, ctx));
    EXPECT_TRUE(call_is_relevant(CallInfo{"f", {"x", "buf"}, "f(x, buf)"}, p, ctx));
    EXPECT_TRUE(call_is_relevant(CallInfo{"f", {"dev->flags"}, "f(dev->flags)"}, p, ctx));
    EXPECT_FALSE(call_is_relevant(CallInfo{"f", {"other"}, "f(other)"}, p, ctx));
    EXPECT_FALSE(call_is_relevant(CallInfo{"f", {}, "f()"}, p, ctx));
}

TEST(AssembleConstraints, OrderLazinessAndSentinel) {
    Fpe fpe;
    fpe.must_not_fully_hold.push_back(ConditionExpr{"y > 0", {}});
    fpe.must_hold.push_back(ConditionExpr{"x == 1", {}});
    fpe.must_hold.push_back(ConditionExpr{"IFF_UP & flags", {}});
    std::size_t prompts = 0;
    ScriptedBackend llm([&](const PromptTemplate&, const Fills& f) {
        ++prompts;
        return answer(interval(f.at("variable"), 0, 0));
    });
    const FunctionDef def = def_of("int f(int x, int y, int flags) { return 0; }", "f");
    ReasoningContext ctx;
    ctx.llm = &llm;
    ctx.body = &def;
    auto stream = assemble_constraints(fpe, InitialStates{}, ctx);
    EXPECT_FALSE(stream.infeasible());
    ASSERT_EQ(stream.size(), 3u);
    EXPECT_EQ(stream.preview()[2].polarity, Polarity::MustNotFullyHold);
    EXPECT_EQ(prompts, 0u);

    auto first = stream.next();
    ASSERT_TRUE(first);
    EXPECT_EQ(first->expr.text, "x == 1");
    EXPECT_EQ(first->polarity, Polarity::MustHold);
    ASSERT_EQ(first->ranges.size(), 1u);
    EXPECT_EQ(prompts, 1u);

    auto second = stream.next();
    ASSERT_TRUE(second);
    // Bitwise atoms are opaque: Unknown without a prompt.
    for (const auto& r : second->ranges) EXPECT_TRUE(r.is_unknown()) << r.describe();
    EXPECT_EQ(prompts, 1u);

    auto third = stream.next();
    ASSERT_TRUE(third);
    EXPECT_EQ(third->polarity, Polarity::MustNotFullyHold);
    EXPECT_EQ(third->asserted_text(), "!(y > 0)");
    EXPECT_FALSE(stream.next());

    Fpe dead;
    dead.infeasible = true;
    auto none = assemble_constraints(dead, InitialStates{}, ctx);
    EXPECT_TRUE(none.infeasible());
    EXPECT_EQ(none.size(), 0u);
    EXPECT_FALSE(none.next());
}

TEST(AssembleConstraints, IrrelevantCallsStayUnknown) {
    Fpe fpe;
    fpe.must_hold.push_back(ConditionExpr{"ready(other)", {}});
    ScriptedBackend never([](const PromptTemplate&, const Fills&) -> std::string { throw std::logic_error("called"); });
    MemoryStore memory;
    ReasoningContext ctx;
    ctx.llm = &never;
    ctx.memory = &memory;
    ctx.index = &corpus().index;
    ctx.target_var = "skb";
    auto stream = assemble_constraints(fpe, p_of({"skb == NULL"}), ctx);
    const auto c = stream.next();
    ASSERT_TRUE(c);
    ASSERT_EQ(c->ranges.size(), 1u);
    EXPECT_TRUE(c->ranges[0].is_unknown());
    EXPECT_EQ(c->ranges[0].subject_kind, SubjectKind::CallReturn);
}

TEST(Propagate, RewritesIntoCalleeParameters) {
    const FunctionDef callee = def_of("void g(struct s *q, int n) { }", "g");
    const CallInfo exit_call{"g", {"p", "k + 1"}, "g(p, k + 1)"};
    SymbolicRange len = interval("p->len", 1, std::nullopt);
    std::vector<FeasiblePathConstraint> surviving = {
        {ConditionExpr{"p->len > 0", {Literal{0, "p->len > 0", true}}}, Polarity::MustHold, {len}},
        {ConditionExpr{"other", {}}, Polarity::MustHold, {}},
        {ConditionExpr{"k > 2 && p", {}}, Polarity::MustNotFullyHold, {interval("k", 0, 2)}},
    };
    const auto out = propagate_constraints(surviving, exit_call, callee);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].expr.text, "q->len > 0");
    EXPECT_EQ(out[0].expr.literals[0].text, "q->len > 0");
    ASSERT_EQ(out[0].ranges.size(), 1u);
    EXPECT_EQ(out[0].ranges[0].subject, "q->len");
    // `k + 1` is not an access path, so k stays a caller name and its range is dropped.
    EXPECT_EQ(out[1].expr.text, "k > 2 && q");
    EXPECT_EQ(out[1].polarity, Polarity::MustNotFullyHold);
    EXPECT_TRUE(out[1].ranges.empty());
}

TEST(SortHints, FromTargetPAndRanges) {
    InitialStates p = p_of({"skb == NULL"});
    p.propagated.push_back(FeasiblePathConstraint{ConditionExpr{"ok", {}}, Polarity::MustHold, {boolean("ok", true)}});
    const auto h = sort_hints(p, "dev", {"alias"}, {interval("len", 0, 4)});
    EXPECT_EQ(h.at("dev"), SmtSort::Ptr);
    EXPECT_EQ(h.at("alias"), SmtSort::Ptr);
    EXPECT_EQ(h.at("skb"), SmtSort::Ptr);
    EXPECT_EQ(h.at("ok"), SmtSort::Bool);
    EXPECT_EQ(h.at("len"), SmtSort::Int);
}

}  // namespace
}  // namespace pfa
