#pragma once

// Shared test helpers: fixture paths, scratch directories, canned providers.

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "qualjudge/corpus.hpp"
#include "qualjudge/explanations.hpp"
#include "qualjudge/mock_provider.hpp"
#include "qualjudge/prompts.hpp"

namespace testutil {

inline std::filesystem::path fixture_dir() {
    return std::filesystem::path(QUALJUDGE_FIXTURE_DIR);
}

inline std::filesystem::path fixture(const std::string& name) {
    return fixture_dir() / name;
}

inline const qualjudge::PromptLibrary& prompts() {
    static qualjudge::PromptLibrary lib = qualjudge::PromptLibrary::load(QUALJUDGE_PROMPT_DIR);
    return lib;
}

/// Unique scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("qualjudge-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline qualjudge::Instance make_instance(std::string id, std::string input = "input",
                                         std::string truth = "truth",
                                         std::string response = "response") {
    qualjudge::Instance instance;
    instance.id = std::move(id);
    instance.user_input = std::move(input);
    instance.ground_truths = {std::move(truth)};
    instance.generated_response = std::move(response);
    instance.task_comment = "The task metric is binary Match.";
    instance.metric = qualjudge::Metric::Match;
    return instance;
}

inline qualjudge::IssueExplanation make_explanation(std::string id, std::string summary) {
    qualjudge::IssueExplanation explanation;
    explanation.instance_id = std::move(id);
    explanation.summary = std::move(summary);
    explanation.full_analysis = "analysis of " + explanation.instance_id;
    explanation.model = "mock-model";
    return explanation;
}

inline qualjudge::ProviderConfig mock_config() {
    qualjudge::ProviderConfig config;
    config.name = "mock";
    config.model = "mock-model";
    return config;
}

inline std::string random_text(std::mt19937& rng, std::size_t max_len) {
    static const std::string alphabet =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 :_.,;!?'\"\n\t{}[]()-";
    std::uniform_int_distribution<std::size_t> len_dist(0, max_len);
    std::uniform_int_distribution<std::size_t> char_dist(0, alphabet.size() - 1);
    std::string out;
    std::size_t len = len_dist(rng);
    out.reserve(len);
    for (std::size_t i = 0; i < len; ++i) out.push_back(alphabet[char_dist(rng)]);
    return out;
}

}  // namespace testutil
