// SPDX-License-Identifier: Apache-2.0
#include "pfa/range.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>

#include "pfa/error.hpp"
#include "pfa/hash.hpp"

namespace pfa {

using nlohmann::json;

std::string to_string(RangeKind k) {
    switch (k) {
        case RangeKind::Interval: return "interval";
        case RangeKind::Boolean: return "bool";
        case RangeKind::NullState: return "null";
        case RangeKind::Predicate: return "predicate";
        case RangeKind::Unknown: return "unknown";
    }
    return "unknown";
}

std::string to_string(Confidence c) {
    switch (c) {
        case Confidence::Definite: return "definite";
        case Confidence::Assumed: return "assumed";
        case Confidence::Unknown: return "unknown";
    }
    return "unknown";
}

std::string to_string(Polarity p) { return p == Polarity::MustHold ? "must_hold" : "must_not_fully_hold"; }

namespace {

std::string bound(const std::optional<std::int64_t>& v, bool low) {
    return v ? std::to_string(*v) : (low ? "-inf" : "inf");
}

RangeKind range_kind_from(const std::string& s) {
    for (auto k : {RangeKind::Interval, RangeKind::Boolean, RangeKind::NullState, RangeKind::Predicate,
                   RangeKind::Unknown}) {
        if (to_string(k) == s) return k;
    }
    throw Error(ErrorCode::ParseError, "unknown range kind '" + s + "'");
}

Confidence confidence_from(const std::string& s) {
    for (auto c : {Confidence::Definite, Confidence::Assumed, Confidence::Unknown}) {
        if (to_string(c) == s) return c;
    }
    throw Error(ErrorCode::ParseError, "unknown confidence '" + s + "'");
}

std::string trim(std::string s) {
    s.erase(0, s.find_first_not_of(" \t\r\n`"));
    const auto end = s.find_last_not_of(" \t\r\n`");
    s.erase(end == std::string::npos ? 0 : end + 1);
    return s;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

std::string SymbolicRange::describe() const {
    switch (kind) {
        case RangeKind::Interval: return subject + ": [" + bound(low, true) + ", " + bound(high, false) + "]";
        case RangeKind::Boolean: return subject + ": " + (bool_value ? "true" : "false");
        case RangeKind::NullState:
            return subject + ": " + (null_state == NullState::Null      ? "NULL"
                                     : null_state == NullState::NonNull ? "non-NULL"
                                                                        : "unknown");
        case RangeKind::Predicate: return subject + ": " + predicate;
        case RangeKind::Unknown: return subject + ": unknown";
    }
    return subject;
}

SymbolicRange SymbolicRange::unknown_variable(const std::string& name) {
    SymbolicRange r;
    r.subject = name;
    return r;
}

SymbolicRange SymbolicRange::unknown_call(const CallInfo& call) {
    SymbolicRange r;
    r.subject_kind = SubjectKind::CallReturn;
    r.subject = call.text;
    r.callee = call.callee;
    r.args = call.args;
    return r;
}

json to_json(const SymbolicRange& r) {
    json j{{"subject", r.subject},
           {"subject_kind", r.subject_kind == SubjectKind::Variable ? "variable" : "call_return"},
           {"kind", to_string(r.kind)},
           {"confidence", to_string(r.confidence)}};
    if (r.subject_kind == SubjectKind::CallReturn) {
        j["callee"] = r.callee;
        j["args"] = r.args;
    }
    switch (r.kind) {
        case RangeKind::Interval:
            j["low"] = r.low ? json(*r.low) : json(nullptr);
            j["high"] = r.high ? json(*r.high) : json(nullptr);
            break;
        case RangeKind::Boolean: j["value"] = r.bool_value; break;
        case RangeKind::NullState:
            j["value"] = r.null_state == NullState::Null ? "null" : r.null_state == NullState::NonNull ? "nonnull" : "unknown";
            break;
        case RangeKind::Predicate: j["value"] = r.predicate; break;
        case RangeKind::Unknown: break;
    }
    return j;
}

SymbolicRange symbolic_range_from_json(const json& j) {
    SymbolicRange r;
    r.subject = j.at("subject");
    r.subject_kind = j.value("subject_kind", "variable") == "variable" ? SubjectKind::Variable : SubjectKind::CallReturn;
    r.callee = j.value("callee", std::string());
    r.args = j.value("args", std::vector<std::string>{});
    r.kind = range_kind_from(j.at("kind"));
    r.confidence = confidence_from(j.value("confidence", "unknown"));
    switch (r.kind) {
        case RangeKind::Interval:
            if (!j.at("low").is_null()) r.low = j.at("low").get<std::int64_t>();
            if (!j.at("high").is_null()) r.high = j.at("high").get<std::int64_t>();
            break;
        case RangeKind::Boolean: r.bool_value = j.at("value").get<bool>(); break;
        case RangeKind::NullState: {
            const std::string v = j.at("value");
            r.null_state = v == "null" ? NullState::Null : v == "nonnull" ? NullState::NonNull : NullState::Unknown;
            break;
        }
        case RangeKind::Predicate: r.predicate = j.at("value"); break;
        case RangeKind::Unknown: break;
    }
    return r;
}

std::string FeasiblePathConstraint::asserted_text() const {
    return polarity == Polarity::MustHold ? expr.text : negate_condition(expr.text);
}

json to_json(const FeasiblePathConstraint& c) {
    json ranges = json::array();
    for (const auto& r : c.ranges) ranges.push_back(to_json(r));
    json lits = json::array();
    for (const auto& l : c.expr.literals) lits.push_back({{"cond", l.cond}, {"text", l.text}, {"positive", l.positive}});
    return json{{"expr", c.expr.text}, {"literals", lits}, {"polarity", to_string(c.polarity)}, {"ranges", ranges}};
}

FeasiblePathConstraint constraint_from_json(const json& j) {
    FeasiblePathConstraint c;
    c.expr.text = j.at("expr");
    for (const auto& l : j.value("literals", json::array())) {
        c.expr.literals.push_back(Literal{l.at("cond"), l.at("text"), l.at("positive")});
    }
    c.polarity = j.at("polarity") == "must_hold" ? Polarity::MustHold : Polarity::MustNotFullyHold;
    for (const auto& r : j.at("ranges")) c.ranges.push_back(symbolic_range_from_json(r));
    return c;
}

std::vector<std::string> InitialStates::predicates() const {
    std::vector<std::string> out = assumptions;
    for (const auto& c : propagated) out.push_back(c.asserted_text());
    return out;
}

std::string InitialStates::render() const {
    const auto preds = predicates();
    if (preds.empty()) return "no assumptions";
    std::string s;
    for (std::size_t i = 0; i < preds.size(); ++i) s += (i ? " && " : "") + preds[i];
    return s;
}

std::optional<SymbolicRange> range_from_p(const InitialStates& p, const std::string& subject) {
    for (const auto& a : p.assumptions) {
        ExprPtr e;
        try {
            e = parse_c_expr(a);
        } catch (const Error&) {
            continue;
        }
        std::optional<NullState> state;
        auto is_null_lit = [](const Expr& x) {
            return x.kind == ExprKind::Identifier && (x.op == "NULL" || x.op == "nullptr");
        };
        if (e->kind == ExprKind::Binary && (e->op == "==" || e->op == "!=")) {
            const Expr* other = nullptr;
            if (is_null_lit(*e->kids[1])) other = e->kids[0].get();
            if (is_null_lit(*e->kids[0])) other = e->kids[1].get();
            if (other != nullptr && print_expr(*other) == subject) {
                state = e->op == "==" ? NullState::Null : NullState::NonNull;
            }
        } else if (e->kind == ExprKind::Unary && e->op == "!" && print_expr(*e->kids[0]) == subject) {
            state = NullState::Null;
        } else if (print_expr(*e) == subject) {
            state = NullState::NonNull;
        }
        if (state) {
            SymbolicRange r = SymbolicRange::unknown_variable(subject);
            r.kind = RangeKind::NullState;
            r.null_state = *state;
            r.confidence = Confidence::Assumed;
            return r;
        }
    }
    for (const auto& c : p.propagated) {
        for (const auto& r : c.ranges) {
            if (r.subject == subject && !r.is_unknown()) {
                SymbolicRange out = r;
                out.confidence = Confidence::Assumed;
                return out;
            }
        }
    }
    return std::nullopt;
}

ParsedAnswer parse_range_answer(const std::string& text) {
    ParsedAnswer out;
    auto block = fenced_block(text, "range");
    if (!block) {
        static const std::regex marker(R"((^|\n)\s*NEED_CONTEXT:\s*([A-Za-z_]\w*))");
        std::smatch m;
        if (std::regex_search(text, m, marker)) {
            out.need_context = m[2].str();
            return out;
        }
        out.problem = "missing ```range block";
        return out;
    }
    std::map<std::string, std::string> fields;
    std::istringstream in(*block);
    for (std::string line; std::getline(in, line);) {
        const auto colon = line.find(':');
        if (trim(line).empty()) continue;
        if (colon == std::string::npos) {
            out.problem = "line without a key: " + trim(line);
            return out;
        }
        fields[lower(trim(line.substr(0, colon)))] = trim(line.substr(colon + 1));
    }
    auto field = [&](const std::string& k) -> std::optional<std::string> {
        auto it = fields.find(k);
        if (it == fields.end() || it->second.empty()) return std::nullopt;
        return it->second;
    };
    SymbolicRange r;
    r.subject = field("subject").value_or("");
    const auto kind = field("kind");
    if (!kind) {
        out.problem = "missing kind";
        return out;
    }
    try {
        r.kind = range_kind_from(lower(*kind));
        r.confidence = confidence_from(lower(field("confidence").value_or("assumed")));
    } catch (const Error& e) {
        out.problem = e.what();
        return out;
    }
    auto parse_bound = [&](const std::string& key, bool is_low) -> std::optional<std::optional<std::int64_t>> {
        const auto v = field(key);
        if (!v) return std::nullopt;
        const std::string s = lower(*v);
        if ((is_low && (s == "-inf" || s == "-infinity")) || (!is_low && (s == "inf" || s == "+inf" || s == "infinity"))) {
            return std::optional<std::int64_t>{};
        }
        try {
            std::size_t used = 0;
            const long long n = std::stoll(s, &used, 0);
            if (used != s.size()) return std::nullopt;
            return std::optional<std::int64_t>{n};
        } catch (const std::exception&) {
            return std::nullopt;
        }
    };
    switch (r.kind) {
        case RangeKind::Interval: {
            auto lo = parse_bound("low", true);
            auto hi = parse_bound("high", false);
            if (!lo || !hi) {
                out.problem = "interval needs integer low and high (or -inf/inf)";
                return out;
            }
            r.low = *lo;
            r.high = *hi;
            if (r.low && r.high && *r.low > *r.high) {
                out.problem = "interval low exceeds high";
                return out;
            }
            break;
        }
        case RangeKind::Boolean: {
            const std::string v = lower(field("value").value_or(""));
            if (v != "true" && v != "false") {
                out.problem = "bool range needs value true or false";
                return out;
            }
            r.bool_value = v == "true";
            break;
        }
        case RangeKind::NullState: {
            std::string v = lower(field("value").value_or(""));
            v.erase(std::remove(v.begin(), v.end(), '-'), v.end());
            if (v == "null") r.null_state = NullState::Null;
            else if (v == "nonnull" || v == "notnull") r.null_state = NullState::NonNull;
            else {
                out.problem = "null range needs value null or nonnull";
                return out;
            }
            break;
        }
        case RangeKind::Predicate: {
            const auto v = field("value");
            if (!v) {
                out.problem = "predicate range needs a value";
                return out;
            }
            r.predicate = *v;
            break;
        }
        case RangeKind::Unknown:
            r.confidence = Confidence::Unknown;
            break;
    }
    out.range = r;
    return out;
}

std::string render_range_block(const SymbolicRange& r) {
    std::string s = "```range\nsubject: " + r.subject + "\nkind: " + to_string(r.kind) + "\n";
    switch (r.kind) {
        case RangeKind::Interval: s += "low: " + bound(r.low, true) + "\nhigh: " + bound(r.high, false) + "\n"; break;
        case RangeKind::Boolean: s += std::string("value: ") + (r.bool_value ? "true" : "false") + "\n"; break;
        case RangeKind::NullState:
            s += std::string("value: ") + (r.null_state == NullState::Null ? "null" : "nonnull") + "\n";
            break;
        case RangeKind::Predicate: s += "value: " + r.predicate + "\n"; break;
        case RangeKind::Unknown: break;
    }
    return s + "confidence: " + to_string(r.confidence) + "\n```";
}

namespace {

ExprPtr make_ident(const std::string& name) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Identifier;
    e->op = name;
    return e;
}

ExprPtr rename_tree(const ExprPtr& e, const std::map<std::string, std::string>& renames) {
    if (is_access_path(*e)) {
        if (auto it = renames.find(print_expr(*e)); it != renames.end()) return make_ident(it->second);
    }
    bool changed = false;
    std::vector<ExprPtr> kids;
    for (std::size_t i = 0; i < e->kids.size(); ++i) {
        const bool callee = e->kind == ExprKind::Call && i == 0;
        kids.push_back(callee ? e->kids[i] : rename_tree(e->kids[i], renames));
        changed = changed || kids.back() != e->kids[i];
    }
    if (!changed) return e;
    auto copy = std::make_shared<Expr>(*e);
    copy->kids = std::move(kids);
    return copy;
}

bool is_constant_like(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
        return std::isupper(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_';
    });
}

// Access paths of `text` and their root identifiers.
std::set<std::string> paths_and_roots(const std::string& text) {
    std::set<std::string> out;
    try {
        for (const auto& p : access_paths(*parse_c_expr(text))) {
            out.insert(p);
            const auto cut = p.find_first_of("-.[");
            out.insert(p.substr(0, cut));
        }
    } catch (const Error&) {
    }
    return out;
}

}  // namespace

std::string rename_paths(const std::string& c_text, const std::map<std::string, std::string>& renames) {
    if (renames.empty()) return c_text;
    try {
        return print_expr(*rename_tree(parse_c_expr(c_text), renames));
    } catch (const Error&) {
        return c_text;
    }
}

std::string canonical_p(const InitialStates& p, const CallInfo& call) {
    std::map<std::string, std::string> arg_names;
    for (std::size_t i = 0; i < call.args.size(); ++i) {
        try {
            if (is_access_path(*parse_c_expr(call.args[i]))) arg_names.emplace(call.args[i], "arg" + std::to_string(i));
        } catch (const Error&) {
        }
    }
    std::vector<std::string> relevant;
    for (const auto& pred : p.predicates()) {
        const auto paths = paths_and_roots(pred);
        const bool mentions = std::any_of(arg_names.begin(), arg_names.end(),
                                          [&](const auto& kv) { return paths.contains(kv.first); });
        if (mentions) relevant.push_back(normalize_condition(rename_paths(pred, arg_names)));
    }
    std::sort(relevant.begin(), relevant.end());
    relevant.erase(std::unique(relevant.begin(), relevant.end()), relevant.end());

    static const std::regex arg_re(R"(arg\d+)");
    std::map<std::string, std::string> others;
    for (const auto& pred : relevant) {
        try {
            for (const auto& path : access_paths(*parse_c_expr(pred))) {
                const std::string root = path.substr(0, path.find_first_of("-.["));
                if (std::regex_match(root, arg_re) || is_constant_like(root) || others.contains(root)) continue;
                others.emplace(root, "v" + std::to_string(others.size()));
            }
        } catch (const Error&) {
        }
    }
    std::string out;
    for (const auto& pred : relevant) out += (out.empty() ? "" : " && ") + rename_paths(pred, others);
    return out.empty() ? "true" : out;
}

std::string memory_key(const FunctionRef& callee, const std::string& canonical) {
    return short_hash(callee.name + '\x1f' + callee.file + '\x1f' + canonical);
}

SymbolicRange MemoryStore::get_or_compute(const std::string& key, const std::function<Entry()>& compute, bool* hit) {
    {
        std::shared_lock lock(mutex_);
        if (auto it = entries_.find(key); it != entries_.end()) {
            if (hit) *hit = true;
            return it->second.value;
        }
    }
    // A failed computation is not shared: its waiters try again themselves.
    while (true) {
        std::shared_future<Entry> waiting;
        std::promise<Entry> promise;
        bool owner = false;
        {
            std::unique_lock lock(mutex_);
            if (auto it = entries_.find(key); it != entries_.end()) {
                if (hit) *hit = true;
                return it->second.value;
            }
            if (auto it = pending_.find(key); it != pending_.end()) {
                waiting = it->second;
            } else {
                pending_[key] = promise.get_future().share();
                owner = true;
            }
        }
        if (!owner) {
            try {
                SymbolicRange v = waiting.get().value;
                if (hit) *hit = true;
                return v;
            } catch (...) {
                continue;
            }
        }
        if (hit) *hit = false;
        try {
            Entry e = compute();
            e.key = key;
            {
                std::unique_lock lock(mutex_);
                entries_.emplace(key, e);
                pending_.erase(key);
            }
            promise.set_value(e);
            return e.value;
        } catch (...) {
            {
                std::unique_lock lock(mutex_);
                pending_.erase(key);
            }
            promise.set_exception(std::current_exception());
            throw;
        }
    }
}

std::optional<MemoryStore::Entry> MemoryStore::lookup(const std::string& key) const {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    return std::nullopt;
}

std::vector<MemoryStore::Entry> MemoryStore::entries() const {
    std::shared_lock lock(mutex_);
    std::vector<Entry> out;
    for (const auto& [k, e] : entries_) out.push_back(e);
    return out;
}

std::size_t MemoryStore::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

void MemoryStore::clear() {
    std::unique_lock lock(mutex_);
    entries_.clear();
}

void MemoryStore::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) return;
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, "unreadable memory file " + file.string() + ": " + e.what());
    }
    std::unique_lock lock(mutex_);
    for (const auto& e : j.value("entries", json::array())) {
        Entry entry{e.at("key"), e.at("callee"), e.value("file", std::string()), e.at("canonical_p"),
                    symbolic_range_from_json(e.at("value")), e.value("transcript_ref", std::string())};
        entries_.emplace(entry.key, std::move(entry));
    }
}

void MemoryStore::save(const std::filesystem::path& file) const {
    json arr = json::array();
    for (const auto& e : entries()) {
        arr.push_back({{"key", e.key},
                       {"callee", e.callee},
                       {"file", e.file},
                       {"canonical_p", e.canonical_p},
                       {"value", to_json(e.value)},
                       {"transcript_ref", e.transcript_ref}});
    }
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    out << json{{"version", 1}, {"entries", arr}}.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + file.string());
}

namespace {

const char* const kReformat =
    "Your previous answer did not follow the required format ({problem}). Answer again and end with the fenced "
    "range block exactly as specified.";

std::string reformat_feedback(const std::string& problem) {
    std::string s = kReformat;
    s.replace(s.find("{problem}"), 9, problem);
    return s;
}

void note(ReasonerStats* stats, const std::string& msg, bool degraded) {
    if (stats == nullptr) return;
    stats->diagnostics.push_back(msg);
    if (degraded) stats->degraded = true;
}

bool infrastructure_failure(const Error& e) {
    return e.code() == ErrorCode::BackendError || e.code() == ErrorCode::ReplayMiss ||
           e.code() == ErrorCode::InjectedFault;
}

thread_local std::set<std::string> keys_in_progress;

}  // namespace

SymbolicRange reason_variable_range(const ConditionExpr& expr, const std::string& var, const InitialStates& p,
                                    const FunctionDef& body, LlmBackend& llm, ReasonerStats* stats) {
    if (auto r = range_from_p(p, var)) return *r;
    Fills fills{{"conditional_statement", expr.text},
                {"variable", var},
                {"initial_states", p.render()},
                {"code_snippet", body.text},
                {"function_name", body.name},
                {"feedback", ""}};
    try {
        for (int attempt = 0; attempt < 2; ++attempt) {
            if (stats) ++stats->variable_prompts;
            const auto parsed = parse_range_answer(llm.complete(prompt_template(TemplateId::VarRange), fills));
            if (parsed.range) {
                SymbolicRange r = *parsed.range;
                r.subject_kind = SubjectKind::Variable;
                r.subject = var;
                return r;
            }
            const std::string problem = parsed.need_context ? "variable ranges take no tool calls" : parsed.problem;
            fills["feedback"] = reformat_feedback(problem);
            if (attempt == 1) note(stats, "range of " + var + ": " + problem, false);
        }
    } catch (const Error& e) {
        if (!infrastructure_failure(e)) throw;
        note(stats, "range of " + var + ": " + e.what(), true);
    }
    return SymbolicRange::unknown_variable(var);
}

SymbolicRange reason_call_range(const CallInfo& call, const InitialStates& p, int depth, MemoryStore& memory,
                                const CodeIndex& index, LlmBackend& llm, const ReasonerLimits& limits,
                                ReasonerStats* stats, const std::string& caller_file) {
    const SymbolicRange unknown = SymbolicRange::unknown_call(call);
    if (limits.no_context) return unknown;
    if (depth >= limits.context_depth) {
        if (stats) ++stats->depth_cap_hits;
        note(stats, "context depth " + std::to_string(limits.context_depth) + " reached at " + call.text, false);
        return unknown;
    }
    FunctionDef def;
    try {
        def = retrieve_function(index, call.callee, caller_file);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NotFound && e.code() != ErrorCode::Ambiguous) throw;
        note(stats, call.callee + ": " + e.what(), false);
        return unknown;
    }
    const std::string canonical = canonical_p(p, call);
    const std::string key = memory_key(def.ref(), canonical);
    if (keys_in_progress.contains(key)) {
        note(stats, "recursive query for " + call.text, false);
        return unknown;
    }
    keys_in_progress.insert(key);
    struct Done {
        std::string k;
        ~Done() { keys_in_progress.erase(k); }
    } done{key};

    // P restated over the callee's parameters.
    std::map<std::string, std::string> to_params;
    for (std::size_t i = 0; i < call.args.size() && i < def.params.size(); ++i) to_params[call.args[i]] = def.params[i];
    InitialStates local;
    for (const auto& pred : p.predicates()) {
        const auto paths = paths_and_roots(pred);
        if (std::any_of(to_params.begin(), to_params.end(), [&](const auto& kv) { return paths.contains(kv.first); })) {
            local.assumptions.push_back(rename_paths(pred, to_params));
        }
    }

    auto compute = [&]() -> MemoryStore::Entry {
        Fills fills{{"function_name", def.name}, {"function_body", def.text}, {"initial_states", local.render()},
                    {"call", call.text},         {"context", "none"},        {"feedback", ""}};
        std::string context;
        int tool_calls = 0;
        bool retried = false;
        SymbolicRange value = unknown;
        while (true) {
            if (stats) {
                ++stats->call_prompts;
                stats->deepest_prompt = std::max(stats->deepest_prompt, depth);
            }
            const auto parsed = parse_range_answer(llm.complete(prompt_template(TemplateId::CallRange), fills));
            if (parsed.range) {
                value = *parsed.range;
                value.subject_kind = SubjectKind::CallReturn;
                value.subject = call.text;
                value.callee = call.callee;
                value.args = call.args;
                break;
            }
            if (parsed.need_context && tool_calls < limits.max_tool_calls) {
                ++tool_calls;
                const std::string& name = *parsed.need_context;
                CallInfo inner{name, {}, name + "()"};
                // First call to `name` in the body gives the arguments.
                for (const int line : call_lines(def, name)) {
                    if (auto found = call_on_line(index.line_text(def.file, line), name)) {
                        inner = *found;
                        break;
                    }
                }
                const SymbolicRange got =
                    reason_call_range(inner, local, depth + 1, memory, index, llm, limits, stats, def.file);
                context += "- " + name + ": return value of " + inner.text + " when " + local.render() + " is " +
                           (got.is_unknown() ? std::string("unknown (could not be determined)") : got.describe()) + "\n";
                fills["context"] = context;
                fills["feedback"] = "";
                continue;
            }
            if (retried) {
                note(stats, "range of " + call.text + ": " + (parsed.need_context ? "tool call limit" : parsed.problem),
                     false);
                break;
            }
            retried = true;
            fills["feedback"] = reformat_feedback(parsed.need_context ? "no further tool calls are available"
                                                                      : parsed.problem);
        }
        return MemoryStore::Entry{key, def.name, def.file, canonical, value,
                                  "llm/" + prompt_hash(TemplateId::CallRange, fills) + ".json"};
    };

    try {
        bool hit = false;
        SymbolicRange r = memory.get_or_compute(key, compute, &hit);
        if (hit && stats) ++stats->memory_hits;
        r.subject = call.text;
        r.callee = call.callee;
        r.args = call.args;
        return r;
    } catch (const Error& e) {
        if (!infrastructure_failure(e)) throw;
        note(stats, "range of " + call.text + ": " + e.what(), true);
        return unknown;
    }
}

bool call_is_relevant(const CallInfo& call, const InitialStates& p, const ReasoningContext& ctx) {
    std::set<std::string> in_p;
    for (const auto& pred : p.predicates()) {
        try {
            for (const auto& path : access_paths(*parse_c_expr(pred))) in_p.insert(path);
        } catch (const Error&) {
        }
    }
    for (const auto& a : call.args) {
        if (a == ctx.target_var) return true;
        if (std::find(ctx.aliases.begin(), ctx.aliases.end(), a) != ctx.aliases.end()) return true;
        if (in_p.contains(a)) return true;
    }
    return false;
}

ConstraintStream::ConstraintStream(const Fpe& fpe, InitialStates p, ReasoningContext& ctx)
    : p_(std::move(p)), ctx_(&ctx) {
    if (fpe.infeasible) {
        infeasible_ = true;
        return;
    }
    for (const auto& e : fpe.must_hold) pending_.push_back(FeasiblePathConstraint{e, Polarity::MustHold, {}});
    for (const auto& e : fpe.must_not_fully_hold) {
        pending_.push_back(FeasiblePathConstraint{e, Polarity::MustNotFullyHold, {}});
    }
}

std::optional<FeasiblePathConstraint> ConstraintStream::next() {
    if (cursor_ >= pending_.size()) return std::nullopt;
    FeasiblePathConstraint c = pending_[cursor_++];
    ReasoningContext& ctx = *ctx_;
    for (const Atom& atom : condition_atoms(c.expr.text)) {
        switch (atom.kind) {
            case AtomKind::Variable:
                if (auto r = range_from_p(p_, atom.text)) {
                    c.ranges.push_back(*r);
                } else if (ctx.llm != nullptr && ctx.body != nullptr) {
                    c.ranges.push_back(reason_variable_range(c.expr, atom.text, p_, *ctx.body, *ctx.llm, &ctx.stats));
                } else {
                    c.ranges.push_back(SymbolicRange::unknown_variable(atom.text));
                }
                break;
            case AtomKind::Call:
                if (call_is_relevant(*atom.call, p_, ctx) && ctx.llm && ctx.memory && ctx.index) {
                    c.ranges.push_back(reason_call_range(*atom.call, p_, 0, *ctx.memory, *ctx.index, *ctx.llm,
                                                         ctx.limits, &ctx.stats,
                                                         ctx.body ? ctx.body->file : std::string()));
                } else {
                    c.ranges.push_back(SymbolicRange::unknown_call(*atom.call));
                }
                break;
            case AtomKind::Constant:
            case AtomKind::Opaque:
                c.ranges.push_back(SymbolicRange::unknown_variable(atom.text));
                break;
        }
    }
    return c;
}

ConstraintStream assemble_constraints(const Fpe& fpe, const InitialStates& p, ReasoningContext& ctx) {
    return ConstraintStream(fpe, p, ctx);
}

std::vector<FeasiblePathConstraint> propagate_constraints(const std::vector<FeasiblePathConstraint>& surviving,
                                                          const CallInfo& exit_call, const FunctionDef& callee) {
    std::map<std::string, std::string> to_params;
    for (std::size_t i = 0; i < exit_call.args.size() && i < callee.params.size(); ++i) {
        try {
            if (is_access_path(*parse_c_expr(exit_call.args[i]))) to_params[exit_call.args[i]] = callee.params[i];
        } catch (const Error&) {
        }
    }
    auto mentions = [&](const std::string& text) {
        const auto paths = paths_and_roots(text);
        return std::any_of(to_params.begin(), to_params.end(), [&](const auto& kv) { return paths.contains(kv.first); });
    };
    std::vector<FeasiblePathConstraint> out;
    for (const auto& c : surviving) {
        if (!mentions(c.expr.text)) continue;
        FeasiblePathConstraint r = c;
        r.expr.text = rename_paths(c.expr.text, to_params);
        for (auto& l : r.expr.literals) l.text = rename_paths(l.text, to_params);
        r.ranges.clear();
        for (const auto& range : c.ranges) {
            if (!mentions(range.subject)) continue;
            SymbolicRange x = range;
            x.subject = rename_paths(range.subject, to_params);
            for (auto& a : x.args) a = rename_paths(a, to_params);
            r.ranges.push_back(std::move(x));
        }
        out.push_back(std::move(r));
    }
    return out;
}

SortMap sort_hints(const InitialStates& p, const std::string& target_var, const std::vector<std::string>& aliases,
                   const std::vector<SymbolicRange>& ranges) {
    SortMap h;
    auto add_range = [&](const SymbolicRange& r) {
        switch (r.kind) {
            case RangeKind::NullState: h.emplace(r.subject, SmtSort::Ptr); break;
            case RangeKind::Boolean: h.emplace(r.subject, SmtSort::Bool); break;
            case RangeKind::Interval: h.emplace(r.subject, SmtSort::Int); break;
            default: break;
        }
    };
    if (!target_var.empty()) h.emplace(target_var, SmtSort::Ptr);
    for (const auto& a : aliases) h.emplace(a, SmtSort::Ptr);
    for (const auto& a : p.assumptions) {
        for (const auto& atom : condition_atoms(a)) {
            if (auto r = range_from_p(p, atom.text)) add_range(*r);
        }
    }
    for (const auto& c : p.propagated) {
        for (const auto& r : c.ranges) add_range(r);
    }
    for (const auto& r : ranges) add_range(r);
    return h;
}

}  // namespace pfa
