#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "qualjudge/chat.hpp"
#include "qualjudge/sha256.hpp"
#include "qualjudge/util.hpp"

namespace qualjudge {

struct CacheKey {
    std::string digest;  // 64 hex chars

    bool operator==(const CacheKey&) const = default;
};

/// Canonical serialization hashed into the cache key: fields in fixed order,
/// message content verbatim (prompt text is significant byte-for-byte).
inline std::string canonical_request(const std::string& provider_id, const ChatRequest& request) {
    nlohmann::ordered_json j;
    j["provider_id"] = provider_id;
    j["model"] = request.model;
    j["temperature"] = request.temperature;
    j["max_output_tokens"] = request.max_output_tokens;
    j["response_format"] =
        request.response_format == ResponseFormat::StructuredObject ? "structured_object"
                                                                    : "free_text";
    auto messages = nlohmann::ordered_json::array();
    for (const auto& message : request.messages) {
        nlohmann::ordered_json m;
        m["role"] = to_string(message.role);
        m["content"] = message.content;
        messages.push_back(std::move(m));
    }
    j["messages"] = std::move(messages);
    return j.dump();
}

inline CacheKey cache_key(const std::string& provider_id, const ChatRequest& request) {
    return CacheKey{sha256_hex(canonical_request(provider_id, request))};
}

inline nlohmann::ordered_json response_to_json(const ChatResponse& response) {
    nlohmann::ordered_json j;
    j["content"] = response.content;
    j["finish_reason"] = to_string(response.finish_reason);
    if (response.usage) {
        j["usage"] = {{"prompt_tokens", response.usage->prompt_tokens},
                      {"completion_tokens", response.usage->completion_tokens},
                      {"total_tokens", response.usage->total_tokens}};
    }
    j["provider_id"] = response.provider_id;
    return j;
}

inline ChatResponse response_from_json(const nlohmann::json& j) {
    ChatResponse response;
    response.content = j.at("content").get<std::string>();
    response.finish_reason = finish_reason_from_string(j.at("finish_reason").get<std::string>());
    if (j.contains("usage")) {
        TokenUsage usage;
        usage.prompt_tokens = j.at("usage").value("prompt_tokens", 0L);
        usage.completion_tokens = j.at("usage").value("completion_tokens", 0L);
        usage.total_tokens = j.at("usage").value("total_tokens", 0L);
        response.usage = usage;
    }
    response.provider_id = j.value("provider_id", "");
    return response;
}

/// One file per key under a cache directory. Writes are atomic
/// (write-temp-then-rename); corrupted entries count as misses and get
/// rewritten. I/O problems degrade to warnings, never failures.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) {
            warn("cache directory unusable (" + ec.message() + "); running uncached");
            usable_ = false;
        }
    }

    std::optional<ChatResponse> get(const CacheKey& key) {
        if (!usable_) return std::nullopt;
        auto path = entry_path(key);
        std::error_code ec;
        if (!std::filesystem::exists(path, ec) || ec) {
            misses_.fetch_add(1);
            return std::nullopt;
        }
        try {
            auto parsed = nlohmann::json::parse(read_text_file(path));
            ChatResponse response = response_from_json(parsed);
            hits_.fetch_add(1);
            return response;
        } catch (const std::exception& ex) {
            warn("corrupted cache entry " + key.digest + " treated as miss: " + ex.what());
            misses_.fetch_add(1);
            return std::nullopt;
        }
    }

    void put(const CacheKey& key, const ChatResponse& response) {
        if (!usable_) return;
        try {
            write_text_file_atomic(entry_path(key), response_to_json(response).dump() + "\n");
        } catch (const std::exception& ex) {
            warn(std::string("cache write failed: ") + ex.what());
        }
    }

    const std::filesystem::path& dir() const { return dir_; }
    std::uint64_t hits() const { return hits_.load(); }
    std::uint64_t misses() const { return misses_.load(); }
    std::uint64_t io_warnings() const { return io_warnings_.load(); }

private:
    std::filesystem::path entry_path(const CacheKey& key) const {
        return dir_ / (key.digest + ".json");
    }

    void warn(const std::string& message) {
        io_warnings_.fetch_add(1);
        std::cerr << "[qualjudge] warning: " << message << "\n";
    }

    std::filesystem::path dir_;
    bool usable_ = true;
    std::atomic<std::uint64_t> hits_{0};
    std::atomic<std::uint64_t> misses_{0};
    std::atomic<std::uint64_t> io_warnings_{0};
};

/// Serve from cache when possible; misses delegate to the provider and
/// persist the answer. A null cache degrades to a plain live call.
inline ChatResponse cached_complete(Provider& provider, const ChatRequest& request,
                                    ResponseCache* cache) {
    if (!cache) return provider.complete(request);
    CacheKey key = cache_key(provider.id(), request);
    if (auto hit = cache->get(key)) return *hit;
    ChatResponse response = provider.complete(request);
    cache->put(key, response);
    return response;
}

}  // namespace qualjudge
