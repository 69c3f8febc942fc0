#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qualjudge/chat.hpp"
#include "qualjudge/errors.hpp"
#include "qualjudge/http_provider.hpp"
#include "qualjudge/mock_provider.hpp"
#include "qualjudge/prompts.hpp"
#include "qualjudge/util.hpp"

namespace qualjudge {

/// One reproducible run: dataset, providers, algorithm, seeds, directories.
/// Everything lives in a JSON config file; command-line flags override
/// individual fields and secrets come from the environment only.
struct RunConfig {
    std::filesystem::path dataset;
    ProviderConfig judge;
    ProviderConfig evaluator;
    bool has_judge = false;
    bool has_evaluator = false;
    std::string algorithm = "cumulative";  // "cumulative" | "direct"
    std::vector<long> seeds;               // empty = single run in dataset order
    int parallelism = 1;
    std::filesystem::path cache_dir;  // empty = uncached
    std::filesystem::path output_dir = "outputs";
    double failure_threshold = 1.0;
    std::filesystem::path prompt_dir;        // empty = library default
    std::filesystem::path mock_script;       // test hook: scripted provider
    std::filesystem::path explanations_path; // cluster/evaluate input override
};

inline ProviderConfig provider_config_from_json(const nlohmann::json& j,
                                                const std::string& fallback_name) {
    ProviderConfig config;
    config.name = j.value("name", fallback_name);
    config.base_url = j.value("base_url", std::string{});
    config.chat_path = j.value("chat_path", config.chat_path);
    config.model = j.value("model", std::string{});
    config.api_key_env = j.value("api_key_env", std::string{});
    config.temperature = j.value("temperature", config.temperature);
    config.max_output_tokens = j.value("max_output_tokens", config.max_output_tokens);
    config.requests_per_minute = j.value("requests_per_minute", config.requests_per_minute);
    config.max_retries = j.value("max_retries", config.max_retries);
    config.max_prompt_chars = j.value("max_prompt_chars", config.max_prompt_chars);
    config.connect_timeout_s = j.value("connect_timeout_s", config.connect_timeout_s);
    config.read_timeout_s = j.value("read_timeout_s", config.read_timeout_s);
    return config;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const ParseError&) {
        throw ConfigError("cannot open config file: " + path.string());
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError("config file " + path.string() + ": " + ex.what());
    }
    RunConfig config;
    try {
        if (j.contains("dataset")) config.dataset = j.at("dataset").get<std::string>();
        if (j.contains("judge")) {
            config.judge = provider_config_from_json(j.at("judge"), "judge");
            config.has_judge = true;
        }
        if (j.contains("evaluator")) {
            config.evaluator = provider_config_from_json(j.at("evaluator"), "evaluator");
            config.has_evaluator = true;
        }
        config.algorithm = j.value("algorithm", config.algorithm);
        if (j.contains("seeds")) config.seeds = j.at("seeds").get<std::vector<long>>();
        config.parallelism = j.value("parallelism", config.parallelism);
        if (j.contains("cache_dir")) config.cache_dir = j.at("cache_dir").get<std::string>();
        if (j.contains("output_dir")) config.output_dir = j.at("output_dir").get<std::string>();
        config.failure_threshold = j.value("failure_threshold", config.failure_threshold);
        if (j.contains("prompt_dir")) config.prompt_dir = j.at("prompt_dir").get<std::string>();
        if (j.contains("mock_script")) config.mock_script = j.at("mock_script").get<std::string>();
        if (j.contains("explanations"))
            config.explanations_path = j.at("explanations").get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError("config file " + path.string() + ": " + ex.what());
    }
    if (config.algorithm != "cumulative" && config.algorithm != "direct")
        throw ConfigError("config: algorithm must be 'cumulative' or 'direct', got '" +
                          config.algorithm + "'");
    if (config.parallelism < 1) throw ConfigError("config: parallelism must be >= 1");
    return config;
}

/// Mock script file: an array of rules, each with optional
/// "match_contains" (string or array of strings; omitted = match all) and
/// either "response" or "round_robin".
inline std::vector<ScriptRule> load_mock_script(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError("mock script " + path.string() + ": " + ex.what());
    }
    if (!j.is_array()) throw ConfigError("mock script must be a JSON array of rules");
    std::vector<ScriptRule> script;
    for (const auto& rule : j) {
        RequestMatcher matcher = match_any();
        if (rule.contains("match_contains")) {
            const auto& m = rule.at("match_contains");
            if (m.is_string()) {
                matcher = match_contains(m.get<std::string>());
            } else if (m.is_array()) {
                matcher = match_contains_all(m.get<std::vector<std::string>>());
            } else {
                throw ConfigError("mock script: match_contains must be string or array");
            }
        }
        RequestResponder responder;
        if (rule.contains("response")) {
            responder = respond_fixed(rule.at("response").get<std::string>());
        } else if (rule.contains("round_robin")) {
            responder = respond_round_robin(rule.at("round_robin").get<std::vector<std::string>>());
        } else {
            throw ConfigError("mock script: each rule needs 'response' or 'round_robin'");
        }
        script.push_back({std::move(matcher), std::move(responder)});
    }
    return script;
}

enum class ProviderRole { Judge, Evaluator };

/// The mock script, when set, stands in for both roles so every command is
/// runnable offline.
inline std::unique_ptr<Provider> build_provider(const RunConfig& config, ProviderRole role) {
    if (!config.mock_script.empty())
        return std::make_unique<MockProvider>(load_mock_script(config.mock_script));
    const bool want_judge = role == ProviderRole::Judge;
    if (want_judge && !config.has_judge)
        throw ConfigError("config: no judge provider configured (and no --mock-script)");
    if (!want_judge && !config.has_evaluator)
        throw ConfigError("config: no evaluator provider configured (and no --mock-script)");
    const ProviderConfig& provider = want_judge ? config.judge : config.evaluator;
    if (provider.base_url.empty())
        throw ConfigError("config: provider '" + provider.name + "' has no base_url");
    if (provider.model.empty())
        throw ConfigError("config: provider '" + provider.name + "' has no model");
    return std::make_unique<HttpProvider>(provider);
}

/// Request parameters used with whichever provider build_provider returned.
inline ProviderConfig effective_provider_config(const RunConfig& config, ProviderRole role) {
    if (!config.mock_script.empty()) {
        ProviderConfig mock;
        mock.name = "mock";
        mock.model = "mock-model";
        return mock;
    }
    return role == ProviderRole::Judge ? config.judge : config.evaluator;
}

inline PromptLibrary load_prompts(const RunConfig& config) {
    if (!config.prompt_dir.empty()) return PromptLibrary::load(config.prompt_dir);
    return PromptLibrary::load_default();
}

}  // namespace qualjudge
