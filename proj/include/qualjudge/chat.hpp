#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "qualjudge/errors.hpp"

namespace qualjudge {

enum class Role { System, User, Assistant };

inline std::string to_string(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

struct ChatMessage {
    Role role = Role::User;
    std::string content;
};

enum class ResponseFormat { FreeText, StructuredObject };

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_output_tokens = 1024;
    ResponseFormat response_format = ResponseFormat::FreeText;
};

enum class FinishReason { Stop, Length, Other };

inline std::string to_string(FinishReason reason) {
    switch (reason) {
        case FinishReason::Stop: return "stop";
        case FinishReason::Length: return "length";
        case FinishReason::Other: return "other";
    }
    return "other";
}

inline FinishReason finish_reason_from_string(const std::string& text) {
    if (text == "stop") return FinishReason::Stop;
    if (text == "length") return FinishReason::Length;
    return FinishReason::Other;
}

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
    long total_tokens = 0;
};

struct ChatResponse {
    std::string content;
    FinishReason finish_reason = FinishReason::Stop;
    std::optional<TokenUsage> usage;
    std::string provider_id;
};

/// Connection settings for one chat-completion provider. The wire shape is
/// the de-facto chat-completions JSON (model, messages, temperature,
/// max_tokens), which every supported provider family speaks.
struct ProviderConfig {
    std::string name = "default";
    std::string base_url;
    std::string chat_path = "/v1/chat/completions";
    std::string model;
    std::string api_key_env;
    double temperature = 0.0;
    int max_output_tokens = 1024;
    double requests_per_minute = 60.0;
    int max_retries = 3;
    long max_prompt_chars = 400000;
    double connect_timeout_s = 10.0;
    double read_timeout_s = 120.0;
};

inline ChatRequest make_user_request(const ProviderConfig& config, std::string prompt,
                                     ResponseFormat format = ResponseFormat::FreeText) {
    ChatRequest request;
    request.model = config.model;
    request.messages.push_back({Role::User, std::move(prompt)});
    request.temperature = config.temperature;
    request.max_output_tokens = config.max_output_tokens;
    request.response_format = format;
    return request;
}

/// Chat-completion backend. complete() validates the request, bumps the
/// call counter, and dispatches; counters let tests assert how many live
/// calls a pipeline stage performed.
class Provider {
public:
    virtual ~Provider() = default;

    ChatResponse complete(const ChatRequest& request) {
        validate(request);
        calls_.fetch_add(1, std::memory_order_relaxed);
        return do_complete(request);
    }

    std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }
    virtual const std::string& id() const = 0;

private:
    static void validate(const ChatRequest& request) {
        if (request.messages.empty())
            throw std::invalid_argument("ChatRequest: messages must be non-empty");
        if (request.messages.back().role != Role::User)
            throw std::invalid_argument("ChatRequest: last message must have role=user");
        if (request.temperature < 0.0)
            throw std::invalid_argument("ChatRequest: temperature must be >= 0");
        if (request.max_output_tokens <= 0)
            throw std::invalid_argument("ChatRequest: max_output_tokens must be positive");
    }

    virtual ChatResponse do_complete(const ChatRequest& request) = 0;

    std::atomic<std::uint64_t> calls_{0};
};

inline ChatResponse complete(Provider& provider, const ChatRequest& request) {
    return provider.complete(request);
}

/// Token bucket admitting `per_minute` requests per minute with roughly one
/// second of burst capacity. Only admission is serialized; callers perform
/// their I/O outside the lock.
class TokenBucket {
public:
    using Clock = std::chrono::steady_clock;
    using NowFn = std::function<Clock::time_point()>;
    using SleepFn = std::function<void(std::chrono::duration<double>)>;

    explicit TokenBucket(double per_minute, NowFn now = {}, SleepFn sleep = {})
        : rate_per_s_(per_minute / 60.0),
          capacity_(std::max(1.0, per_minute / 60.0)),
          tokens_(capacity_),
          now_(now ? std::move(now) : [] { return Clock::now(); }),
          sleep_(sleep ? std::move(sleep)
                       : [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); }) {
        last_refill_ = now_();
    }

    void acquire() {
        while (true) {
            std::chrono::duration<double> wait{0.0};
            {
                std::lock_guard<std::mutex> lock(mutex_);
                refill();
                if (tokens_ >= 1.0) {
                    tokens_ -= 1.0;
                    return;
                }
                wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_s_);
            }
            sleep_(wait);
        }
    }

private:
    void refill() {
        auto now = now_();
        std::chrono::duration<double> elapsed = now - last_refill_;
        last_refill_ = now;
        tokens_ = std::min(capacity_, tokens_ + elapsed.count() * rate_per_s_);
    }

    double rate_per_s_;
    double capacity_;
    double tokens_;
    NowFn now_;
    SleepFn sleep_;
    Clock::time_point last_refill_;
    std::mutex mutex_;
};

}  // namespace qualjudge
