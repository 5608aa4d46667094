// SPDX-License-Identifier: Apache-2.0
#include "pfa/llm.hpp"

#include <fstream>
#include <sstream>

#include "pfa/error.hpp"
#include "pfa/hash.hpp"

namespace pfa {

using nlohmann::json;

std::string to_string(TemplateId id) {
    switch (id) {
        case TemplateId::VarRange: return "VarRange";
        case TemplateId::CallRange: return "CallRange";
        case TemplateId::SmtConvert: return "SmtConvert";
        case TemplateId::SmtMerge: return "SmtMerge";
        case TemplateId::SmtFix: return "SmtFix";
    }
    return "VarRange";
}

TemplateId template_id_from_string(const std::string& s) {
    for (auto id : {TemplateId::VarRange, TemplateId::CallRange, TemplateId::SmtConvert, TemplateId::SmtMerge,
                    TemplateId::SmtFix}) {
        if (to_string(id) == s) return id;
    }
    throw Error(ErrorCode::ConfigError, "unknown prompt template '" + s + "'");
}

std::string to_string(BackendKind k) {
    switch (k) {
        case BackendKind::Http: return "http";
        case BackendKind::Replay: return "replay";
        case BackendKind::Mock: return "mock";
    }
    return "mock";
}

std::vector<std::string> PromptTemplate::placeholders() const {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while ((pos = body.find('{', pos)) != std::string::npos) {
        const auto end = body.find('}', pos);
        if (end == std::string::npos) break;
        const std::string name = body.substr(pos + 1, end - pos - 1);
        bool ident = !name.empty();
        for (char c : name) ident = ident && (std::isalnum(static_cast<unsigned char>(c)) || c == '_');
        if (ident && std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
        pos = end + 1;
    }
    return out;
}

namespace {

const char* const kRangeFormat = R"(End your answer with exactly one fenced block in this format:
```range
subject: <the variable or call>
kind: interval | bool | null | predicate | unknown
value: <true/false for bool, null/nonnull for null, C expression for predicate>
low: <integer or -inf, interval only>
high: <integer or inf, interval only>
confidence: definite | assumed | unknown
```)";

const char* const kSmtRules = R"(- Use SMT-LIB2 syntax only.
- Pointers have sort Ptr and the null pointer is the constant null.
- Name each variable, member access, or call after its C text; wrap names that are not plain identifiers in bars, e.g. |dev->flags| or |skb_unref(skb)|.
- Use the sorts listed under Known symbols; a pointer used as a condition p becomes (not (= p null)).
- Encode bitwise operations, casts, or anything else you cannot express as one opaque Int symbol named after its C text.)";

std::vector<PromptTemplate> build_catalog() {
    std::vector<PromptTemplate> c;

    PromptTemplate var;
    var.id = TemplateId::VarRange;
    var.system_role = "You are an expert C/C++ programmer.";
    var.body = std::string(R"(Task Description: Your goal is to determine the possible value ranges for each variable in {conditional_statement} assuming the {initial_states} when {conditional_statement} is executed.
Report the range of the variable {variable}.

Important:
- Analyze each line sequentially through symbolic execution.
- Consider function semantics based on their names.
- Pay special attention to pointer operations and conditions.
- Track how variable ranges change through the execution path.

After the analysis, conclude your answer.

Code Snippet ({function_name}):
{code_snippet}

Please provide your analysis in clear steps, explaining how you arrived at the value ranges.
)") + kRangeFormat + "\n{feedback}";
    var.few_shot = {FewShot{
        "Determine the range of ret in `if (ret)` assuming p == NULL.\n\nint ret = 0;\nif (p)\n\tret = 1;\nif (ret)",
        "1. ret starts at 0.\n2. The assignment ret = 1 only runs when p is non-null, which P rules out.\n3. "
        "So ret is 0 at the condition.\n```range\nsubject: ret\nkind: interval\nlow: 0\nhigh: 0\n"
        "confidence: definite\n```"}};
    c.push_back(var);

    PromptTemplate call;
    call.id = TemplateId::CallRange;
    call.system_role = "You are an expert C/C++ programmer.";
    call.body = std::string(R"(Task Description:
Given the function {function_name} with body
{function_body}
your goal is to determine the possible value ranges for the function return value when {initial_states}. The call under analysis is {call}. If the value range cannot be directly determined and further investigation in deeper function is required, please use the search_context tool to retrieve the function body for further analysis. To use the tool, reply with a single line `NEED_CONTEXT: <function name>` and nothing else.

Important:
- Analyze each line sequentially through symbolic execution.
- Consider function semantics based on their names.
- Pay special attention to pointer operations and conditions.

Context gathered so far:
{context}

Please provide your analysis in clear steps, explaining how you arrived at the value ranges.
)") + kRangeFormat + "\n{feedback}";
    call.few_shot = {FewShot{
        "Determine the return value of is_valid(dev) when dev == NULL.\n\nbool is_valid(struct device *dev)\n{\n"
        "\tif (!dev)\n\t\treturn false;\n\treturn dev->ok;\n}",
        "1. The first statement returns false when dev is NULL.\n2. P states dev == NULL, so that branch is taken.\n"
        "```range\nsubject: is_valid(dev)\nkind: bool\nvalue: false\nconfidence: definite\n```"}};
    c.push_back(call);

    PromptTemplate conv;
    conv.id = TemplateId::SmtConvert;
    conv.system_role = "You are an SMT constraint expert.";
    conv.body = std::string(R"(Task Description:
Convert the following C/C++ conditional expressions into SMT-LIB2 solver constraints:
{conditional_expressions}

Known symbols:
{symbol_sorts}

When generating SMT-LIB2 solver scripts, follow these critical guidelines:
)") + kSmtRules + R"(

Return only the constraints, one (assert ...) per expression, in the following format:
```smt2
; expression 1
(assert constraint 1)
; expression 2
(assert constraint 2)
...
```
{feedback})";
    c.push_back(conv);

    PromptTemplate merge;
    merge.id = TemplateId::SmtMerge;
    merge.system_role = "You are an expert SMT-LIB2 constraint solver.";
    merge.body = std::string(R"(Task Description:
I'll provide an SMT-LIB2 script and a set of additional constraints. Please combine them into a single script and keeping all existing constraints (both from the original script and the new constraint sets). If any new constraints are missing variable definitions, make sure to add or modify the necessary declarations.
Return the declarations only, as a complete SMT-LIB2 preamble in a ```smt2 block.

Original SMT-LIB2 script:
{smt_query_script}

Additional Constraint Set:
{additional_constraints}

Known symbols:
{symbol_sorts}
)");
    c.push_back(merge);

    PromptTemplate fix;
    fix.id = TemplateId::SmtFix;
    fix.system_role = "You are an SMT constraint expert.";
    fix.body = std::string(R"(Task Description:
The SMT-LIB2 script you generated contains errors. Please fix and regenerate the SMT-LIB2 script. The script should be directly executable. Keep the `; block N` comments.

Script:
{script}

Error details: {error_message}

Additional Requirements:
)") + kSmtRules + "\nReturn the whole script in a ```smt2 block.\n";
    c.push_back(fix);
    return c;
}

thread_local CallLog* current_log = nullptr;

}  // namespace

const PromptTemplate& prompt_template(TemplateId id) {
    static const std::vector<PromptTemplate> catalog = build_catalog();
    return catalog.at(static_cast<std::size_t>(id));
}

std::string render_prompt(const PromptTemplate& t, const Fills& fills) {
    std::string out = t.body;
    for (const auto& name : t.placeholders()) {
        auto it = fills.find(name);
        if (it == fills.end()) {
            throw Error(ErrorCode::BackendError, to_string(t.id) + " prompt is missing fill '" + name + "'");
        }
        const std::string key = "{" + name + "}";
        std::size_t pos = 0;
        while ((pos = out.find(key, pos)) != std::string::npos) {
            out.replace(pos, key.size(), it->second);
            pos += it->second.size();
        }
    }
    return out;
}

std::string prompt_hash(TemplateId id, const Fills& fills) {
    json j{{"template", to_string(id)}, {"fills", fills}};
    return short_hash(j.dump());
}

json to_json(const Exchange& e) {
    return json{{"hash", e.hash},         {"template", to_string(e.template_id)}, {"template_version", e.template_version},
                {"model", e.model},       {"system", e.system},                    {"prompt", e.prompt},
                {"fills", e.fills},       {"response", e.response}};
}

Exchange exchange_from_json(const json& j) {
    Exchange e;
    e.hash = j.at("hash");
    e.template_id = template_id_from_string(j.at("template"));
    e.template_version = j.value("template_version", 1);
    e.model = j.value("model", std::string());
    e.system = j.value("system", std::string());
    e.prompt = j.value("prompt", std::string());
    e.fills = j.value("fills", Fills{});
    e.response = j.at("response");
    return e;
}

void write_exchange(const std::filesystem::path& file, const Exchange& e) {
    std::filesystem::create_directories(file.parent_path());
    const auto tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << to_json(e).dump(2) << '\n';
        if (!out) throw Error(ErrorCode::BackendError, "cannot write transcript " + file.string());
    }
    std::filesystem::rename(tmp, file);
}

std::size_t CallLog::total() const {
    std::size_t n = 0;
    for (const auto& [id, k] : calls) n += k;
    return n;
}

ScopedCallLog::ScopedCallLog(CallLog& log) : previous_(current_log) { current_log = &log; }
ScopedCallLog::~ScopedCallLog() { current_log = previous_; }

std::string LlmBackend::complete(const PromptTemplate& t, const Fills& fills) {
    const std::string prompt = render_prompt(t, fills);
    counts_[static_cast<std::size_t>(t.id)].fetch_add(1);
    if (current_log != nullptr) ++current_log->calls[t.id];
    std::string response = dispatch(t, fills, prompt);
    if (current_log != nullptr) {
        current_log->exchanges.push_back(
            Exchange{prompt_hash(t.id, fills), t.id, t.version, model_name(), t.system_role, prompt, fills, response});
    }
    return response;
}

std::size_t LlmBackend::calls(TemplateId id) const { return counts_[static_cast<std::size_t>(id)].load(); }

std::size_t LlmBackend::total_calls() const {
    std::size_t n = 0;
    for (const auto& c : counts_) n += c.load();
    return n;
}

ReplayBackend::ReplayBackend(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string ReplayBackend::dispatch(const PromptTemplate& t, const Fills& fills, const std::string&) {
    const std::string hash = prompt_hash(t.id, fills);
    const auto file = dir_ / (hash + ".json");
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorCode::ReplayMiss, "no recorded " + to_string(t.id) + " exchange " + hash);
    try {
        return exchange_from_json(json::parse(in)).response;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ReplayMiss, "unreadable transcript " + file.string() + ": " + e.what());
    }
}

ScriptedBackend::ScriptedBackend(Responder responder, std::string model)
    : responder_(std::move(responder)), model_(std::move(model)) {}

std::string ScriptedBackend::dispatch(const PromptTemplate& t, const Fills& fills, const std::string&) {
    return responder_(t, fills);
}

RecordingBackend::RecordingBackend(std::shared_ptr<LlmBackend> inner, std::filesystem::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {}

std::string RecordingBackend::dispatch(const PromptTemplate& t, const Fills& fills, const std::string& prompt) {
    std::string response = inner_->dispatch(t, fills, prompt);
    Exchange e{prompt_hash(t.id, fills), t.id, t.version, inner_->model_name(), t.system_role, prompt, fills, response};
    std::lock_guard lock(write_mutex_);
    write_exchange(dir_ / (e.hash + ".json"), e);
    return response;
}

std::optional<std::string> fenced_block(const std::string& text, const std::string& tag) {
    const std::string open = "```" + tag;
    std::size_t pos = 0;
    while ((pos = text.find(open, pos)) != std::string::npos) {
        const std::size_t after = pos + open.size();
        if (after < text.size() && text[after] != '\n' && text[after] != '\r' && text[after] != ' ') {
            pos = after;
            continue;
        }
        const auto body_start = text.find('\n', after);
        if (body_start == std::string::npos) return std::nullopt;
        const auto close = text.find("```", body_start + 1);
        if (close == std::string::npos) return std::nullopt;
        return text.substr(body_start + 1, close - body_start - 1);
    }
    return std::nullopt;
}

}  // namespace pfa
