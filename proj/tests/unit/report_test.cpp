// SPDX-License-Identifier: Apache-2.0
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "corpus.hpp"
#include "helpers.hpp"

namespace pfa {
namespace {

using nlohmann::json;

json location(const std::string& uri, int line) {
    return {{"physicalLocation", {{"artifactLocation", {{"uri", uri}}}, {"region", {{"startLine", line}}}}}};
}

json result(const std::string& rule, const std::string& uri, int source, int sink, const std::string& target = "") {
    json r{{"ruleId", rule},
           {"message", {{"text", "m"}}},
           {"locations", json::array({location(uri, sink)})},
           {"codeFlows",
            json::array({{{"threadFlows",
                           json::array({{{"locations", json::array({{{"location", location(uri, source)}},
                                                                     {{"location", location(uri, sink)}}})}}})}}})}};
    if (!target.empty()) r["properties"] = {{"targetVariable", target}};
    return r;
}

std::string sarif(const json& results) {
    return json{{"version", "2.1.0"},
                {"runs", json::array({{{"tool", {{"driver", {{"name", "CodeQL"}}}}}, {"results", results}}})}}
        .dump();
}

const CodeIndex& index() { return testing::corpus().index; }

TEST(Ingest, MissingNullTestOnTunInfo) {
    const auto res = parse_report_text(
        sarif(json::array({result("MissingNullTest.ql", "net/ip_tunnel.c", 4, 62, "tun_info")})), ReportFormat::SARIF,
        index());
    ASSERT_EQ(res.warnings.size(), 1u);
    const Warning& w = res.warnings[0];
    EXPECT_EQ(w.bug_type, BugType::NPD);
    EXPECT_EQ(w.analyzer, Analyzer::CodeQL);
    EXPECT_EQ(w.pair.target_var, "tun_info");
    EXPECT_EQ(w.trace.size(), 1u);
    EXPECT_EQ(w.id, warning_id(Analyzer::CodeQL, "MissingNullTest.ql", w.pair.sink, "tun_info"));
}

TEST(Ingest, EmptyResults) {
    const auto res = parse_report_text(sarif(json::array()), ReportFormat::SARIF, index());
    EXPECT_TRUE(res.warnings.empty());
    EXPECT_TRUE(res.diagnostics.empty());
}

TEST(Ingest, UnresolvableResultIsDiagnosedAndExcluded) {
    const auto res = parse_report_text(sarif(json::array({
                                           result("cpp/null-dereference", "net/ip_tunnel.c", 4, 62),
                                           result("cpp/null-dereference", "lib/missing.c", 3, 9),
                                           result("cpp/null-dereference", "lib/straight.c", 4, 7),
                                       })),
                                       ReportFormat::SARIF, index());
    EXPECT_EQ(res.warnings.size(), 2u);
    ASSERT_EQ(res.diagnostics.size(), 1u);
    EXPECT_EQ(res.diagnostics[0].code, ErrorCode::UnresolvedTrace);
}

TEST(Ingest, UnknownRuleIsDiagnosed) {
    const auto res = parse_report_text(sarif(json::array({result("cpp/unused-local", "lib/straight.c", 4, 7)})),
                                       ReportFormat::SARIF, index());
    EXPECT_TRUE(res.warnings.empty());
    ASSERT_EQ(res.diagnostics.size(), 1u);
    EXPECT_EQ(res.diagnostics[0].code, ErrorCode::UnknownRuleId);
}

TEST(Ingest, MalformedInput) {
    EXPECT_PFA_ERROR(parse_report_text("{not json", ReportFormat::SARIF, index()), ErrorCode::MalformedReport);
    EXPECT_PFA_ERROR(parse_report_text("{\"runs\": 3}", ReportFormat::SARIF, index()), ErrorCode::MalformedReport);
    EXPECT_PFA_ERROR(parse_report_text("<results><errors>", ReportFormat::CppCheckXML, index()),
                     ErrorCode::MalformedReport);
    EXPECT_PFA_ERROR(parse_report_text("{}", ReportFormat::InferJSON, index()), ErrorCode::MalformedReport);
}

TEST(Ingest, FormatDetection) {
    const auto reports = testing::fixtures_dir() / "reports";
    EXPECT_EQ(detect_report_format(reports / "codeql.sarif"), ReportFormat::SARIF);
    EXPECT_EQ(detect_report_format(reports / "cppcheck.xml"), ReportFormat::CppCheckXML);
    EXPECT_EQ(detect_report_format(reports / "infer.json"), ReportFormat::InferJSON);

    const auto dir = testing::scratch_dir("detect");
    std::ofstream(dir / "a.out") << "\n  <?xml version=\"1.0\"?><results/>";
    std::ofstream(dir / "b.out") << "{\"runs\": []}";
    std::ofstream(dir / "c.out") << "# plain text";
    std::ofstream(dir / "d.out") << "   ";
    EXPECT_EQ(detect_report_format(dir / "a.out"), ReportFormat::CppCheckXML);
    EXPECT_EQ(detect_report_format(dir / "b.out"), ReportFormat::SARIF);
    EXPECT_PFA_ERROR(detect_report_format(dir / "c.out"), ErrorCode::MalformedReport);
    EXPECT_PFA_ERROR(detect_report_format(dir / "d.out"), ErrorCode::MalformedReport);
}

TEST(Ingest, FixtureReports) {
    const auto& c = testing::corpus();
    const auto dir = testing::fixtures_dir() / "reports";
    const auto codeql = parse_report(dir / "codeql.sarif", ReportFormat::SARIF, c.index);
    EXPECT_EQ(codeql.warnings.size(), 11u);
    EXPECT_TRUE(codeql.diagnostics.empty());
    const auto infer = parse_report(dir / "infer.json", ReportFormat::InferJSON, c.index);
    ASSERT_EQ(infer.warnings.size(), 2u);
    EXPECT_EQ(infer.warnings[0].analyzer, Analyzer::Infer);
    EXPECT_EQ(infer.warnings[0].pair.target_var, "c");
    const auto cpp = parse_report(dir / "cppcheck.xml", ReportFormat::CppCheckXML, c.index);
    ASSERT_EQ(cpp.warnings.size(), 1u);
    EXPECT_EQ(cpp.warnings[0].pair.target_var, "q");
    EXPECT_EQ(cpp.warnings[0].trace.size(), 1u);
    ASSERT_EQ(cpp.diagnostics.size(), 1u);
    EXPECT_EQ(cpp.diagnostics[0].code, ErrorCode::UnknownRuleId);
    EXPECT_EQ(c.warnings.size(), 14u);
}

TEST(Ingest, InferTraceCrossesCall) {
    const Warning& w = testing::corpus().from("bring_up");
    ASSERT_EQ(w.trace.size(), 2u);
    EXPECT_EQ(w.trace[1].name, "set_mtu");
    ASSERT_EQ(w.call_edges.size(), 1u);
    EXPECT_TRUE(w.call_edges[0].downward);
}

TEST(IngestProperty, WarningInvariants) {
    const auto& c = testing::corpus();
    for (const auto& w : c.warnings) {
        ASSERT_FALSE(w.trace.empty());
        EXPECT_EQ(w.call_edges.size(), w.trace.size() - 1) << w.id;
        EXPECT_EQ(c.index.enclosing(w.pair.source.file, w.pair.source.line)->name, w.trace.front().name) << w.id;
        EXPECT_EQ(c.index.enclosing(w.pair.sink.file, w.pair.sink.line)->name, w.trace.back().name) << w.id;
        EXPECT_EQ(warning_from_json(to_json(w)), w) << w.id;
        EXPECT_EQ(w.id.size(), 16u);
    }
}

TEST(IngestProperty, DeterministicIds) {
    const auto& c = testing::corpus();
    for (const auto& r : c.config.reports) {
        const auto a = parse_report(r.path, r.format, c.index);
        const auto b = parse_report(r.path, r.format, c.index);
        EXPECT_EQ(a.warnings, b.warnings);
    }
}

TEST(Ingest, JsonlRoundTrip) {
    const auto& c = testing::corpus();
    const auto dir = testing::scratch_dir("jsonl");
    write_warnings_jsonl(dir / "w.jsonl", c.warnings);
    EXPECT_EQ(read_warnings_jsonl(dir / "w.jsonl"), c.warnings);
    std::filesystem::remove_all(dir);
}

TEST(ResolveTrace, SameFunctionIsOneElement) {
    const auto t = resolve_trace({{"lib/straight.c", 4, std::nullopt, ""}, {"lib/straight.c", 7, std::nullopt, ""}},
                                 index());
    ASSERT_EQ(t.functions.size(), 1u);
    EXPECT_EQ(t.functions[0].name, "reset_stats");
    EXPECT_TRUE(t.edges.empty());
}

TEST(ResolveTrace, ThreeFunctionChain) {
    const auto t = resolve_trace({{"net/skbuff.c", 31, std::nullopt, ""},
                                  {"net/skbuff.c", 26, std::nullopt, ""},
                                  {"net/skbuff.c", 17, std::nullopt, ""}},
                                 index());
    ASSERT_EQ(t.functions.size(), 3u);
    EXPECT_EQ(t.functions[0].name, "drop_packet");
    EXPECT_EQ(t.functions[1].name, "consume_skb");
    EXPECT_EQ(t.functions[2].name, "__kfree_skb");
    ASSERT_EQ(t.edges.size(), 2u);
    EXPECT_EQ(t.edges[0].site.line, 35);
    EXPECT_EQ(t.edges[1].site.line, 26);
}

TEST(ResolveTrace, MacroBodyIsUnresolved) {
    CodeIndex idx(".");
    idx.add_file("m.c", "#define FREE_IT(p) \\\n\tdo { \\\n\t\tkfree(p); \\\n\t} while (0)\n\nvoid f(void)\n{\n}\n");
    EXPECT_PFA_ERROR(resolve_trace({{"m.c", 3, std::nullopt, ""}, {"m.c", 7, std::nullopt, ""}}, idx),
                     ErrorCode::UnresolvedTrace);
}

TEST(ResolveTrace, UnlinkedFunctionsAreUnresolved) {
    EXPECT_PFA_ERROR(
        resolve_trace({{"lib/straight.c", 4, std::nullopt, ""}, {"drivers/early.c", 9, std::nullopt, ""}}, index()),
        ErrorCode::UnresolvedTrace);
}

TEST(RuleMapping, KnownIdentifiers) {
    EXPECT_EQ(bug_type_for_rule("MissingNullTest.ql"), BugType::NPD);
    EXPECT_EQ(bug_type_for_rule("cpp/use-after-free"), BugType::UAF);
    EXPECT_EQ(bug_type_for_rule("NULL_DEREFERENCE"), BugType::NPD);
    EXPECT_EQ(bug_type_for_rule("nullPointer"), BugType::NPD);
    EXPECT_EQ(bug_type_for_rule("cpp/overflow-buffer"), BugType::BOF);
    EXPECT_FALSE(bug_type_for_rule("unusedFunction"));
}

}  // namespace
}  // namespace pfa
