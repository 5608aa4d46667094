// SPDX-License-Identifier: Apache-2.0
#include "pfa/eval.hpp"

#include <cstdio>
#include <fstream>
#include <numeric>

#include "pfa/error.hpp"

namespace pfa {

Rational::Rational(std::uint64_t num, std::uint64_t den) {
    if (den == 0) throw Error(ErrorCode::ParseError, "zero denominator");
    const std::uint64_t g = std::gcd(num, den);
    num_ = g == 0 ? 0 : num / g;
    den_ = g == 0 ? 1 : den / g;
}

std::string Rational::str() const {
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
}

std::optional<Rational> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::nullopt;
    return Rational(num, den);
}

Confusion& Confusion::operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
}

MetricsReport metrics_from(const Confusion& c) {
    MetricsReport m;
    m.confusion = c;
    m.acc = ratio(c.tp + c.tn, c.total());
    // Precision over a label set without real bugs is reported as undefined.
    m.pre = c.tp + c.fn == 0 ? std::nullopt : ratio(c.tp, c.tp + c.fp);
    m.rec = ratio(c.tp, c.tp + c.fn);
    m.fpr_p = ratio(c.tn, c.tn + c.fn);
    m.fpr_r = ratio(c.tn, c.tn + c.fp);
    return m;
}

LabelSet labels_from_json(const nlohmann::json& doc) {
    const nlohmann::json& j = doc.contains("labels") && doc["labels"].is_object() ? doc["labels"] : doc;
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "labels must be a JSON object");
    LabelSet out;
    for (const auto& [id, v] : j.items()) {
        LabelInfo info;
        try {
            if (v.is_string()) {
                info.label = label_from_string(v.get<std::string>());
            } else if (v.is_boolean()) {
                info.label = v.get<bool>() ? Label::TruePositive : Label::FalsePositive;
            } else {
                const auto& l = v.at("label");
                info.label = l.is_boolean() ? (l.get<bool>() ? Label::TruePositive : Label::FalsePositive)
                                            : label_from_string(l.get<std::string>());
                if (v.contains("analyzer")) info.analyzer = analyzer_from_string(v["analyzer"].get<std::string>());
                if (v.contains("bug_type")) info.bug_type = bug_type_from_string(v["bug_type"].get<std::string>());
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ParseError, "label for " + id + ": " + e.what());
        } catch (const Error& e) {
            throw Error(ErrorCode::ParseError, "label for " + id + ": " + e.what());
        }
        out.emplace(id, info);
    }
    return out;
}

LabelSet load_labels(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read " + file.string());
    try {
        return labels_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, file.string() + ": " + e.what());
    }
}

namespace {

Confusion classify(const Verdict& v, const LabelSet& labels) {
    auto it = labels.find(v.warning_id);
    if (it == labels.end()) throw Error(ErrorCode::MissingLabel, "no label for warning " + v.warning_id);
    const bool bug = it->second.label == Label::TruePositive;
    const bool kept = v.result != VerdictResult::Infeasible;
    Confusion c;
    if (bug && kept) c.tp = 1;
    else if (!bug && kept) c.fp = 1;
    else if (!bug && !kept) c.tn = 1;
    else c.fn = 1;
    return c;
}

std::string group_name(const LabelInfo& info, GroupBy by) {
    if (by == GroupBy::BugType) return info.bug_type ? to_string(*info.bug_type) : "?";
    return info.analyzer ? to_string(*info.analyzer) : "?";
}

}  // namespace

MetricsReport score(const std::vector<Verdict>& verdicts, const LabelSet& labels) {
    Confusion c;
    for (const auto& v : verdicts) c += classify(v, labels);
    return metrics_from(c);
}

std::vector<MetricsRow> breakdown(const std::vector<Verdict>& verdicts, const LabelSet& labels, GroupBy by,
                                  const std::string& technique) {
    std::map<std::string, Confusion> groups;
    Confusion all;
    for (const auto& v : verdicts) {
        const Confusion c = classify(v, labels);
        groups[group_name(labels.at(v.warning_id), by)] += c;
        all += c;
    }
    std::vector<MetricsRow> rows;
    for (const auto& [g, c] : groups) rows.push_back(MetricsRow{g, technique, metrics_from(c)});
    rows.push_back(MetricsRow{"All", technique, metrics_from(all)});
    return rows;
}

std::string metric_cell(const std::optional<Rational>& r) {
    if (!r) return "/";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", r->value());
    return buf;
}

std::string render_markdown(const std::vector<MetricsRow>& rows, GroupBy by) {
    std::string out = std::string("| ") + (by == GroupBy::BugType ? "Type" : "Analyzer") +
                      " | Tech. | Acc. | FPR_P | FPR_R | Pre. | Recall | TP | FP | TN | FN |\n";
    out += "|---|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        const auto& m = r.report;
        const auto& c = m.confusion;
        out += "| " + r.group + " | " + r.technique + " | " + metric_cell(m.acc) + " | " + metric_cell(m.fpr_p) + " | " +
               metric_cell(m.fpr_r) + " | " + metric_cell(m.pre) + " | " + metric_cell(m.rec) + " | " +
               std::to_string(c.tp) + " | " + std::to_string(c.fp) + " | " + std::to_string(c.tn) + " | " +
               std::to_string(c.fn) + " |\n";
    }
    return out;
}

std::string render_csv(const std::vector<MetricsRow>& rows, GroupBy by) {
    auto cell = [](const std::optional<Rational>& r) { return r ? r->str() : std::string("/"); };
    std::string out = std::string(by == GroupBy::BugType ? "type" : "analyzer") +
                      ",technique,acc,fpr_p,fpr_r,pre,rec,tp,fp,tn,fn\n";
    for (const auto& r : rows) {
        const auto& m = r.report;
        const auto& c = m.confusion;
        out += r.group + "," + r.technique + "," + cell(m.acc) + "," + cell(m.fpr_p) + "," + cell(m.fpr_r) + "," +
               cell(m.pre) + "," + cell(m.rec) + "," + std::to_string(c.tp) + "," + std::to_string(c.fp) + "," +
               std::to_string(c.tn) + "," + std::to_string(c.fn) + "\n";
    }
    return out;
}

}  // namespace pfa
