// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pfa/pipeline.hpp"
#include "pfa/report.hpp"

namespace pfa {

/// Exact non-negative fraction in lowest terms.
class Rational {
public:
    Rational(std::uint64_t num, std::uint64_t den);
    [[nodiscard]] std::uint64_t num() const { return num_; }
    [[nodiscard]] std::uint64_t den() const { return den_; }
    [[nodiscard]] double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
    [[nodiscard]] std::string str() const;  // "n/d", or "n" when den is 1
    friend bool operator==(const Rational&, const Rational&) = default;

private:
    std::uint64_t num_;
    std::uint64_t den_;
};

/// nullopt when the denominator is zero.
std::optional<Rational> ratio(std::uint64_t num, std::uint64_t den);

struct Confusion {
    std::uint64_t tp = 0;  // bug, alarm kept
    std::uint64_t fp = 0;  // false alarm, kept
    std::uint64_t tn = 0;  // false alarm, filtered
    std::uint64_t fn = 0;  // bug, filtered
    [[nodiscard]] std::uint64_t total() const { return tp + fp + tn + fn; }
    Confusion& operator+=(const Confusion& o);
    friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct MetricsReport {
    Confusion confusion;
    std::optional<Rational> acc;
    std::optional<Rational> pre;
    std::optional<Rational> rec;
    std::optional<Rational> fpr_p;
    std::optional<Rational> fpr_r;
};

MetricsReport metrics_from(const Confusion& c);

struct LabelInfo {
    Label label = Label::FalsePositive;
    std::optional<Analyzer> analyzer;
    std::optional<BugType> bug_type;
};

using LabelSet = std::map<std::string, LabelInfo>;

/// Accepts `{"id": "TP"}` or `{"id": {"label": "TP", "analyzer": ..., "bug_type": ...}}`,
/// optionally wrapped in `{"labels": ...}`.
LabelSet labels_from_json(const nlohmann::json& j);
LabelSet load_labels(const std::filesystem::path& file);

/// Throws MissingLabel when a verdict has no label.
MetricsReport score(const std::vector<Verdict>& verdicts, const LabelSet& labels);

struct MetricsRow {
    std::string group;      // bug type, analyzer, or "All"
    std::string technique;  // tool or variant name
    MetricsReport report;
};

enum class GroupBy { BugType, Analyzer };

/// One row per group present in the labels, then an "All" row.
std::vector<MetricsRow> breakdown(const std::vector<Verdict>& verdicts, const LabelSet& labels, GroupBy by,
                                  const std::string& technique);

/// Cells with an undefined denominator render as "/".
std::string render_markdown(const std::vector<MetricsRow>& rows, GroupBy by);
std::string render_csv(const std::vector<MetricsRow>& rows, GroupBy by);
/// Two decimals, or "/".
std::string metric_cell(const std::optional<Rational>& r);

}  // namespace pfa
