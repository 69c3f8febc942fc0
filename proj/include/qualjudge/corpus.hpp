#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qualjudge/errors.hpp"
#include "qualjudge/util.hpp"

namespace qualjudge {

enum class Metric { Match, LlmJudgeBinary, PrecomputedScore };

inline std::string to_string(Metric metric) {
    switch (metric) {
        case Metric::Match: return "match";
        case Metric::LlmJudgeBinary: return "llm_judge_binary";
        case Metric::PrecomputedScore: return "precomputed_score";
    }
    return "match";
}

inline Metric metric_from_string(const std::string& text) {
    if (text == "match") return Metric::Match;
    if (text == "llm_judge_binary") return Metric::LlmJudgeBinary;
    if (text == "precomputed_score") return Metric::PrecomputedScore;
    throw ParseError("unknown metric: " + text);
}

/// One NLG example: the task input, reference answer(s), the system output,
/// and the quantitative verdict used to pre-select failures.
struct Instance {
    std::string id;
    std::string user_input;
    std::vector<std::string> ground_truths;
    std::string generated_response;
    std::optional<std::vector<std::string>> retrieved_docs;
    std::string task_comment;
    Metric metric = Metric::Match;
    std::optional<bool> metric_accepted;
    std::optional<double> metric_score;

    bool operator==(const Instance&) const = default;
};

struct Dataset {
    std::string name;
    std::string task_kind;
    std::vector<Instance> instances;
};

inline nlohmann::ordered_json instance_to_json(const Instance& instance) {
    nlohmann::ordered_json j;
    j["id"] = instance.id;
    j["user_input"] = instance.user_input;
    j["ground_truths"] = instance.ground_truths;
    j["generated_response"] = instance.generated_response;
    if (instance.retrieved_docs) j["retrieved_docs"] = *instance.retrieved_docs;
    j["task_comment"] = instance.task_comment;
    j["metric"] = to_string(instance.metric);
    if (instance.metric_accepted) j["metric_accepted"] = *instance.metric_accepted;
    if (instance.metric_score) j["metric_score"] = *instance.metric_score;
    return j;
}

inline Instance instance_from_json(const nlohmann::json& j, const std::string& where) {
    Instance instance;
    auto need = [&](const char* key) -> const nlohmann::json& {
        auto it = j.find(key);
        if (it == j.end()) throw ParseError(where + ": missing field '" + key + "'");
        return *it;
    };
    try {
        instance.id = need("id").get<std::string>();
        instance.user_input = need("user_input").get<std::string>();
        instance.ground_truths = need("ground_truths").get<std::vector<std::string>>();
        instance.generated_response = need("generated_response").get<std::string>();
        if (j.contains("retrieved_docs"))
            instance.retrieved_docs = j.at("retrieved_docs").get<std::vector<std::string>>();
        instance.task_comment = need("task_comment").get<std::string>();
        instance.metric = metric_from_string(need("metric").get<std::string>());
        if (j.contains("metric_accepted"))
            instance.metric_accepted = j.at("metric_accepted").get<bool>();
        if (j.contains("metric_score"))
            instance.metric_score = j.at("metric_score").get<double>();
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(where + ": " + ex.what());
    }
    if (instance.id.empty()) throw ParseError(where + ": empty id");
    if (instance.ground_truths.empty())
        throw ParseError(where + ": ground_truths must have at least one element");
    if (instance.metric == Metric::PrecomputedScore && !instance.metric_score)
        throw ParseError(where + ": metric_score required when metric=precomputed_score");
    if (instance.metric_score && (*instance.metric_score < 0.0 || *instance.metric_score > 1.0))
        throw ParseError(where + ": metric_score outside [0,1]");
    return instance;
}

/// Load a line-delimited dataset. Instance order is preserved exactly as in
/// the file; cumulative clustering is order-sensitive.
inline Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dataset: " + path.string());
    Dataset dataset;
    dataset.name = path.stem().string();
    std::map<std::string, std::size_t> seen;  // id -> line number
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::string where = path.filename().string() + ":" + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& ex) {
            throw ParseError(where + ": " + ex.what());
        }
        Instance instance = instance_from_json(j, where);
        auto [it, inserted] = seen.emplace(instance.id, line_no);
        if (!inserted) {
            throw ParseError("duplicate id '" + instance.id + "' on lines " +
                             std::to_string(it->second) + " and " + std::to_string(line_no) +
                             " of " + path.filename().string());
        }
        dataset.instances.push_back(std::move(instance));
    }
    return dataset;
}

inline void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    std::string out;
    for (const auto& instance : dataset.instances) {
        out += instance_to_json(instance).dump();
        out += '\n';
    }
    write_text_file_atomic(path, out);
}

/// Normalization applied to both sides of the Match metric: lowercase,
/// whitespace runs collapsed, ends trimmed. No stemming, no punctuation
/// stripping.
inline std::string normalize_for_match(std::string_view text) {
    return normalize_whitespace(text);
}

/// True iff any ground truth occurs as a contiguous substring of the
/// generated response, after normalization. Total function.
inline bool match_metric(const std::vector<std::string>& ground_truths,
                         const std::string& generated) {
    std::string haystack = normalize_for_match(generated);
    for (const auto& gt : ground_truths) {
        if (haystack.find(normalize_for_match(gt)) != std::string::npos) return true;
    }
    return false;
}

/// Resolve the quantitative verdict for one instance. A precomputed verdict
/// wins; Match is computed on the fly; scores at or below the threshold
/// count as failures.
inline bool is_failure(const Instance& instance, double score_threshold = 1.0) {
    if (instance.metric_accepted) return !*instance.metric_accepted;
    if (instance.metric == Metric::Match)
        return !match_metric(instance.ground_truths, instance.generated_response);
    if (instance.metric_score) return *instance.metric_score <= score_threshold;
    throw ConfigError("instance '" + instance.id +
                      "' has no resolvable verdict: set metric_accepted or metric_score");
}

/// Keep exactly the rejected instances, in their original relative order.
inline Dataset filter_failures(const Dataset& dataset, double score_threshold = 1.0) {
    Dataset out;
    out.name = dataset.name;
    out.task_kind = dataset.task_kind;
    for (const auto& instance : dataset.instances) {
        if (is_failure(instance, score_threshold)) out.instances.push_back(instance);
    }
    return out;
}

}  // namespace qualjudge
