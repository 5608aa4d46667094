// SPDX-License-Identifier: Apache-2.0
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <thread>

#include "pfa/error.hpp"
#include "pfa/llm.hpp"

namespace pfa {

using nlohmann::json;

HttpBackend::HttpBackend(HttpSettings settings) : settings_(std::move(settings)) {
    if (const char* key = std::getenv(settings_.api_key_env.c_str())) api_key_ = key;
    if (settings_.max_in_flight < 1) settings_.max_in_flight = 1;
}

json HttpBackend::request_body(const PromptTemplate& t, const std::string& prompt) const {
    json messages = json::array();
    messages.push_back({{"role", "system"}, {"content", t.system_role}});
    for (const auto& shot : t.few_shot) {
        messages.push_back({{"role", "user"}, {"content", shot.user}});
        messages.push_back({{"role", "assistant"}, {"content", shot.assistant}});
    }
    messages.push_back({{"role", "user"}, {"content", prompt}});
    return json{{"model", settings_.model},
                {"temperature", temperature()},
                {"max_tokens", settings_.max_tokens},
                {"messages", messages}};
}

std::string HttpBackend::dispatch(const PromptTemplate& t, const Fills&, const std::string& prompt) {
    if (api_key_.empty()) {
        throw Error(ErrorCode::BackendError, "environment variable " + settings_.api_key_env + " is not set");
    }
    // scheme://host[:port][/prefix]
    const auto scheme_end = settings_.base_url.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorCode::ConfigError, "bad base_url " + settings_.base_url);
    const auto path_start = settings_.base_url.find('/', scheme_end + 3);
    const std::string origin = settings_.base_url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : settings_.base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    {
        std::unique_lock lock(slots_mutex_);
        slots_cv_.wait(lock, [&] { return in_flight_ < settings_.max_in_flight; });
        ++in_flight_;
    }
    struct Release {
        HttpBackend* self;
        ~Release() {
            {
                std::lock_guard lock(self->slots_mutex_);
                --self->in_flight_;
            }
            self->slots_cv_.notify_one();
        }
    } release{this};

    const std::string body = request_body(t, prompt).dump();
    std::string last_error;
    for (int attempt = 0; attempt < std::max(1, settings_.retry.max_attempts); ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(settings_.retry.backoff * (1 << (attempt - 1)));
        httplib::Client client(origin);
        client.set_connection_timeout(settings_.timeout);
        client.set_read_timeout(settings_.timeout);
        client.set_write_timeout(settings_.timeout);
        const httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
        auto res = client.Post(prefix + "/chat/completions", headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw Error(ErrorCode::BackendError, "HTTP " + std::to_string(res->status) + ": " + res->body);
        }
        try {
            const auto j = json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw Error(ErrorCode::BackendError, std::string("malformed completion response: ") + e.what());
        }
    }
    throw Error(ErrorCode::BackendError, "giving up after retries: " + last_error);
}

}  // namespace pfa
