#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "qualjudge/chat.hpp"
#include "qualjudge/errors.hpp"
#include "qualjudge/util.hpp"

namespace qualjudge {

using RequestMatcher = std::function<bool(const ChatRequest&)>;
/// Receives the request and how many times this rule has fired before.
using RequestResponder = std::function<std::string(const ChatRequest&, std::uint64_t)>;

struct ScriptRule {
    RequestMatcher match;
    RequestResponder respond;
};

inline std::string last_user_content(const ChatRequest& request) {
    for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
        if (it->role == Role::User) return it->content;
    }
    return {};
}

inline std::string request_text(const ChatRequest& request) {
    std::string all;
    for (const auto& message : request.messages) {
        all += message.content;
        all += '\n';
    }
    return all;
}

inline RequestMatcher match_any() {
    return [](const ChatRequest&) { return true; };
}

inline RequestMatcher match_contains(std::string needle) {
    return [needle = std::move(needle)](const ChatRequest& request) {
        return contains(request_text(request), needle);
    };
}

inline RequestMatcher match_contains_all(std::vector<std::string> needles) {
    return [needles = std::move(needles)](const ChatRequest& request) {
        std::string text = request_text(request);
        for (const auto& needle : needles) {
            if (!contains(text, needle)) return false;
        }
        return true;
    };
}

inline RequestResponder respond_fixed(std::string text) {
    return [text = std::move(text)](const ChatRequest&, std::uint64_t) { return text; };
}

inline RequestResponder respond_round_robin(std::vector<std::string> texts) {
    return [texts = std::move(texts)](const ChatRequest&, std::uint64_t hit) {
        return texts[hit % texts.size()];
    };
}

/// Deterministic scripted provider: each request is answered by the first
/// matching rule. Unmatched requests raise a scripted-gap error so tests
/// must be exhaustive about the traffic they expect.
class MockProvider : public Provider {
public:
    explicit MockProvider(std::vector<ScriptRule> script, std::string model = "mock-model")
        : script_(std::move(script)), model_(std::move(model)), hits_(script_.size(), 0) {}

    const std::string& id() const override { return id_; }
    const std::string& model() const { return model_; }

    std::vector<ChatRequest> requests() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return requests_;
    }

    std::uint64_t rule_hits(std::size_t rule_index) const {
        std::lock_guard<std::mutex> lock(mutex_);
        return hits_.at(rule_index);
    }

private:
    ChatResponse do_complete(const ChatRequest& request) override {
        std::lock_guard<std::mutex> lock(mutex_);
        requests_.push_back(request);
        for (std::size_t i = 0; i < script_.size(); ++i) {
            if (!script_[i].match(request)) continue;
            std::string content = script_[i].respond(request, hits_[i]);
            ++hits_[i];
            ChatResponse response;
            response.content = std::move(content);
            response.finish_reason = FinishReason::Stop;
            response.provider_id = id_;
            return response;
        }
        throw GatewayError(GatewayError::Kind::ScriptedGap,
                           "no scripted response for request: " + fingerprint(request));
    }

    static std::string fingerprint(const ChatRequest& request) {
        std::string text = collapse_newlines(last_user_content(request));
        if (text.size() > 160) text = text.substr(0, 160) + "...";
        return "\"" + text + "\"";
    }

    std::vector<ScriptRule> script_;
    std::string model_;
    std::string id_ = "mock";
    mutable std::mutex mutex_;
    std::vector<std::uint64_t> hits_;
    std::vector<ChatRequest> requests_;
};

}  // namespace qualjudge
