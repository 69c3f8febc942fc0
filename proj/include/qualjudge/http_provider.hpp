#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "qualjudge/chat.hpp"
#include "qualjudge/errors.hpp"

namespace qualjudge {

/// Chat-completions client over HTTP+JSON. Transient failures (429/5xx,
/// timeouts, transport errors) retry with exponential backoff up to
/// config.max_retries extra attempts; auth failures surface immediately.
class HttpProvider : public Provider {
public:
    struct Hooks {
        std::function<void(std::chrono::milliseconds)> sleep;
    };

    explicit HttpProvider(ProviderConfig config, Hooks hooks = {})
        : config_(std::move(config)),
          limiter_(config_.requests_per_minute),
          sleep_(hooks.sleep ? std::move(hooks.sleep) : [](std::chrono::milliseconds d) {
              std::this_thread::sleep_for(d);
          }) {
        while (!config_.base_url.empty() && config_.base_url.back() == '/')
            config_.base_url.pop_back();
        if (!config_.api_key_env.empty()) {
            if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
        }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
        if (config_.base_url.rfind("https://", 0) == 0) {
            throw GatewayError(GatewayError::Kind::Transport,
                               "https base_url requires a TLS-enabled build");
        }
#endif
    }

    const std::string& id() const override { return config_.name; }
    const ProviderConfig& config() const { return config_; }

private:
    ChatResponse do_complete(const ChatRequest& request) override {
        std::string body = build_body(request).dump();
        int attempts = config_.max_retries + 1;
        int last_status = 0;
        std::string last_error;

        for (int attempt = 0; attempt < attempts; ++attempt) {
            if (attempt > 0) sleep_(backoff(attempt));
            limiter_.acquire();

            httplib::Client client(config_.base_url);
            client.set_connection_timeout(std::chrono::duration<double>(config_.connect_timeout_s));
            client.set_read_timeout(std::chrono::duration<double>(config_.read_timeout_s));
            httplib::Headers headers;
            if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

            auto result = client.Post(config_.chat_path, headers, body, "application/json");
            if (!result) {
                last_status = 0;
                last_error = httplib::to_string(result.error());
                continue;  // transport error, retry
            }
            last_status = result->status;
            if (result->status == 401 || result->status == 403) {
                throw GatewayError(GatewayError::Kind::Auth,
                                   "authentication rejected by " + config_.name + " (HTTP " +
                                       std::to_string(result->status) + "): " +
                                       error_message(result->body),
                                   result->status);
            }
            if (is_retryable(result->status)) {
                last_error = error_message(result->body);
                continue;
            }
            if (result->status < 200 || result->status >= 300) {
                throw GatewayError(GatewayError::Kind::MalformedResponse,
                                   "provider " + config_.name + " returned HTTP " +
                                       std::to_string(result->status) + ": " +
                                       error_message(result->body),
                                   result->status);
            }
            return parse_response(result->body);
        }
        throw GatewayError(GatewayError::Kind::ExhaustedRetries,
                           "retries exhausted after " + std::to_string(attempts) +
                               " attempts against " + config_.name + " (last status " +
                               std::to_string(last_status) + "): " + last_error,
                           last_status);
    }

    nlohmann::ordered_json build_body(const ChatRequest& request) const {
        nlohmann::ordered_json body;
        body["model"] = request.model;
        auto messages = nlohmann::ordered_json::array();
        for (const auto& message : request.messages) {
            messages.push_back({{"role", to_string(message.role)}, {"content", message.content}});
        }
        body["messages"] = std::move(messages);
        body["temperature"] = request.temperature;
        body["max_tokens"] = request.max_output_tokens;
        if (request.response_format == ResponseFormat::StructuredObject) {
            body["response_format"] = {{"type", "json_object"}};
        }
        return body;
    }

    ChatResponse parse_response(const std::string& body) const {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& ex) {
            throw GatewayError(GatewayError::Kind::MalformedResponse,
                               std::string("unparseable provider response: ") + ex.what());
        }
        if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
            throw GatewayError(GatewayError::Kind::MalformedResponse,
                               "provider response has no choices: " + error_message(body));
        }
        const auto& choice = j["choices"][0];
        ChatResponse response;
        response.provider_id = config_.name;
        if (choice.contains("message") && choice["message"].contains("content") &&
            !choice["message"]["content"].is_null()) {
            response.content = choice["message"]["content"].get<std::string>();
        }
        response.finish_reason =
            finish_reason_from_string(choice.value("finish_reason", std::string("other")));
        if (j.contains("usage") && j["usage"].is_object()) {
            TokenUsage usage;
            usage.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
            usage.completion_tokens = j["usage"].value("completion_tokens", 0L);
            usage.total_tokens = j["usage"].value("total_tokens", 0L);
            response.usage = usage;
        }
        return response;
    }

    static bool is_retryable(int status) {
        return status == 408 || status == 429 || status >= 500;
    }

    static std::string error_message(const std::string& body) {
        try {
            auto j = nlohmann::json::parse(body);
            if (j.contains("error")) {
                const auto& err = j["error"];
                if (err.is_object() && err.contains("message"))
                    return err["message"].get<std::string>();
                if (err.is_string()) return err.get<std::string>();
            }
        } catch (const nlohmann::json::exception&) {
        }
        std::string text = body.substr(0, 200);
        return text.empty() ? "(empty body)" : text;
    }

    static std::chrono::milliseconds backoff(int attempt) {
        long long ms = 500LL << (attempt - 1);
        return std::chrono::milliseconds(std::min(ms, 30000LL));
    }

    ProviderConfig config_;
    std::string api_key_;
    TokenBucket limiter_;
    std::function<void(std::chrono::milliseconds)> sleep_;
};

}  // namespace qualjudge
