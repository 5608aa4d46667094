// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pfa {

enum class TemplateId { VarRange, CallRange, SmtConvert, SmtMerge, SmtFix };
std::string to_string(TemplateId id);
TemplateId template_id_from_string(const std::string& s);

struct FewShot {
    std::string user;
    std::string assistant;
};

/// Prompt with `{name}` placeholders. Immutable once the catalog is loaded.
struct PromptTemplate {
    TemplateId id = TemplateId::VarRange;
    int version = 1;
    std::string system_role;
    std::string body;
    std::vector<FewShot> few_shot;

    /// Placeholder names in order of first appearance.
    [[nodiscard]] std::vector<std::string> placeholders() const;
};

using Fills = std::map<std::string, std::string>;

/// The built-in prompt catalog.
const PromptTemplate& prompt_template(TemplateId id);

/// Substitutes every placeholder. Throws Error(BackendError) if a fill is missing.
std::string render_prompt(const PromptTemplate& t, const Fills& fills);

/// Transcript key: SHA-256 over the template id and the fills (not the rendered text).
std::string prompt_hash(TemplateId id, const Fills& fills);

/// One recorded request/response pair.
struct Exchange {
    std::string hash;
    TemplateId template_id = TemplateId::VarRange;
    int template_version = 1;
    std::string model;
    std::string system;
    std::string prompt;
    Fills fills;
    std::string response;
};

nlohmann::json to_json(const Exchange& e);
Exchange exchange_from_json(const nlohmann::json& j);

/// Per-thread sink for exchanges and call counts, installed by the pipeline
/// around one segment (or one warning).
struct CallLog {
    std::vector<Exchange> exchanges;
    std::map<TemplateId, std::size_t> calls;
    [[nodiscard]] std::size_t total() const;
};

class ScopedCallLog {
public:
    explicit ScopedCallLog(CallLog& log);
    ~ScopedCallLog();
    ScopedCallLog(const ScopedCallLog&) = delete;
    ScopedCallLog& operator=(const ScopedCallLog&) = delete;

private:
    CallLog* previous_;
};

enum class BackendKind { Http, Replay, Mock };
std::string to_string(BackendKind k);

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds backoff{500};
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;

    /// Renders, dispatches, counts, and records one exchange. Thread-safe.
    std::string complete(const PromptTemplate& t, const Fills& fills);

    /// Dispatch without counting or recording (used by decorators).
    virtual std::string dispatch(const PromptTemplate& t, const Fills& fills, const std::string& prompt) = 0;

    [[nodiscard]] virtual BackendKind kind() const = 0;
    [[nodiscard]] virtual std::string model_name() const { return to_string(kind()); }
    [[nodiscard]] double temperature() const { return 0.0; }

    [[nodiscard]] std::size_t calls(TemplateId id) const;
    [[nodiscard]] std::size_t total_calls() const;

private:
    std::atomic<std::size_t> counts_[5] = {};
};

struct HttpSettings {
    std::string base_url = "https://api.openai.com/v1";
    std::string model = "gpt-4o-mini";
    std::string api_key_env = "OPENAI_API_KEY";
    int max_tokens = 2048;
    std::chrono::seconds timeout{120};
    RetryPolicy retry;
    int max_in_flight = 4;
};

/// OpenAI-compatible chat-completions client.
class HttpBackend final : public LlmBackend {
public:
    explicit HttpBackend(HttpSettings settings);
    std::string dispatch(const PromptTemplate& t, const Fills& fills, const std::string& prompt) override;
    [[nodiscard]] BackendKind kind() const override { return BackendKind::Http; }
    [[nodiscard]] std::string model_name() const override { return settings_.model; }

    /// Request body sent for one prompt (exposed for tests).
    [[nodiscard]] nlohmann::json request_body(const PromptTemplate& t, const std::string& prompt) const;

private:
    HttpSettings settings_;
    std::string api_key_;
    std::mutex slots_mutex_;
    std::condition_variable_any slots_cv_;
    int in_flight_ = 0;
};

/// Serves recorded exchanges from `<dir>/<hash>.json`; throws ReplayMiss otherwise.
class ReplayBackend final : public LlmBackend {
public:
    explicit ReplayBackend(std::filesystem::path dir);
    std::string dispatch(const PromptTemplate& t, const Fills& fills, const std::string& prompt) override;
    [[nodiscard]] BackendKind kind() const override { return BackendKind::Replay; }

private:
    std::filesystem::path dir_;
};

using Responder = std::function<std::string(const PromptTemplate&, const Fills&)>;

/// Test and demo backend answering through a callback.
class ScriptedBackend final : public LlmBackend {
public:
    explicit ScriptedBackend(Responder responder, std::string model = "scripted");
    std::string dispatch(const PromptTemplate& t, const Fills& fills, const std::string& prompt) override;
    [[nodiscard]] BackendKind kind() const override { return BackendKind::Mock; }
    [[nodiscard]] std::string model_name() const override { return model_; }

private:
    Responder responder_;
    std::string model_;
};

/// Forwards to `inner` and stores each exchange under `<dir>/<hash>.json`.
class RecordingBackend final : public LlmBackend {
public:
    RecordingBackend(std::shared_ptr<LlmBackend> inner, std::filesystem::path dir);
    std::string dispatch(const PromptTemplate& t, const Fills& fills, const std::string& prompt) override;
    [[nodiscard]] BackendKind kind() const override { return inner_->kind(); }
    [[nodiscard]] std::string model_name() const override { return inner_->model_name(); }

private:
    std::shared_ptr<LlmBackend> inner_;
    std::filesystem::path dir_;
    std::mutex write_mutex_;
};

/// Writes one exchange as pretty JSON (sorted keys).
void write_exchange(const std::filesystem::path& file, const Exchange& e);

/// Extracts the body of the first fenced block tagged `tag` (```tag ... ```).
std::optional<std::string> fenced_block(const std::string& text, const std::string& tag);

}  // namespace pfa
