#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qualjudge/cache.hpp"
#include "qualjudge/chat.hpp"
#include "qualjudge/errors.hpp"
#include "qualjudge/explanations.hpp"
#include "qualjudge/prompts.hpp"
#include "qualjudge/report.hpp"
#include "qualjudge/util.hpp"

namespace qualjudge {

struct Decision {
    enum class Verdict { Existing, NewType, Invalid };
    Verdict verdict = Verdict::Invalid;
    std::size_t index = 0;  // meaningful only for Existing
    std::string raw;
};

/// Extract the first "Decision: type_k" / "Decision: None" pattern,
/// case-insensitively. Out-of-range indices and pattern-free text are
/// Invalid. Total function.
inline Decision parse_decision(const std::string& raw, std::size_t pool_size) {
    Decision decision;
    decision.raw = raw;
    std::string lowered = to_lower(raw);
    std::size_t search = 0;
    // First occurrence of the full pattern decides; a bare "Decision:"
    // followed by junk is skipped, not matched.
    while (true) {
        std::size_t at = lowered.find("decision:", search);
        if (at == std::string::npos) return decision;  // Invalid
        search = at + 9;
        std::size_t pos = search;
        while (pos < lowered.size() && is_space(lowered[pos])) ++pos;
        if (lowered.compare(pos, 4, "none") == 0) {
            decision.verdict = Decision::Verdict::NewType;
            return decision;
        }
        if (lowered.compare(pos, 5, "type_") == 0) {
            std::size_t digits = pos + 5;
            std::size_t end = digits;
            unsigned long long value = 0;
            bool overflow = false;
            while (end < lowered.size() && lowered[end] >= '0' && lowered[end] <= '9') {
                value = value * 10 + static_cast<unsigned long long>(lowered[end] - '0');
                if (value > 1'000'000'000ULL) overflow = true;
                ++end;
            }
            if (end > digits) {
                if (!overflow && value < pool_size) {
                    decision.verdict = Decision::Verdict::Existing;
                    decision.index = static_cast<std::size_t>(value);
                }
                return decision;  // out-of-range index stays Invalid
            }
        }
    }
}

struct NewTypeParse {
    std::string label;
    std::string description;
    bool warning = false;
};

inline std::string strip_outer_quotes(std::string text) {
    text = trim(text);
    while (text.size() >= 2 && (text.front() == '"' || text.front() == '\'') &&
           text.back() == text.front()) {
        text = trim(text.substr(1, text.size() - 2));
    }
    return text;
}

/// Parse "{SHORT LABEL}: {DESCRIPTION}" output. Splits on the first colon
/// after stripping surrounding quotes; colon-free text degrades to a
/// first-six-words label with a warning. Labels are truncated to 80 chars.
/// Always yields non-empty label and description.
inline NewTypeParse parse_new_type(const std::string& raw) {
    NewTypeParse out;
    std::string text = strip_outer_quotes(raw);
    std::size_t colon = text.find(':');
    if (colon != std::string::npos) {
        out.label = strip_outer_quotes(text.substr(0, colon));
        out.description = strip_outer_quotes(text.substr(colon + 1));
    } else {
        out.warning = true;
        std::string collapsed = normalize_whitespace(text);
        std::size_t pos = 0;
        for (int words = 0; words < 6 && pos != std::string::npos; ++words) {
            pos = collapsed.find(' ', pos == 0 ? 0 : pos + 1);
            if (pos == std::string::npos) break;
        }
        out.label = trim(pos == std::string::npos ? collapsed : collapsed.substr(0, pos));
        out.description = trim(text);
    }
    if (out.label.size() > 80) {
        out.label = trim(out.label.substr(0, 80));
        out.warning = true;
    }
    if (out.label.empty()) {
        out.label = "unnamed issue";
        out.warning = true;
    }
    if (out.description.empty()) {
        out.description = out.label;
        out.warning = true;
    }
    return out;
}

struct ClusterResult {
    Report report;
    std::map<std::string, std::string> assignments;  // instance_id -> type key
    std::vector<std::string> warnings;
};

namespace detail {

inline std::string corrective_decision_suffix(std::size_t pool_size) {
    return "\n\nYour previous answer was not a valid decision. Output exactly \"Decision: "
           "type_k\" where k is one of 0.." +
           std::to_string(pool_size - 1) + ", or \"Decision: None\". DO NOT output anything else.";
}

}  // namespace detail

/// The cumulative clustering loop: explanations are visited one by one
/// (optionally shuffled by seed), each either joins an existing issue type
/// or founds a new one. The first instance always founds type_0. Invalid
/// decisions retry once with a corrective line; a second invalid counts as
/// NewType, biasing toward finer clusters. Inherently sequential.
inline ClusterResult cumulative_cluster(const std::vector<IssueExplanation>& explanations,
                                        const PromptLibrary& lib, Provider& provider,
                                        const ProviderConfig& config, ResponseCache* cache,
                                        std::optional<long> seed = std::nullopt) {
    if (explanations.empty()) throw ConfigError("cumulative_cluster: no explanations");

    ClusterResult result;
    result.report.run_meta.model = config.model;
    result.report.run_meta.algorithm = "cumulative";
    result.report.run_meta.seed = seed;

    std::vector<std::size_t> order(explanations.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (seed) {
        order = shuffled_indices(explanations.size(), static_cast<std::uint64_t>(*seed));
        result.report.run_meta.permutation = order;
    }

    auto call = [&](std::string prompt) {
        ChatRequest request = make_user_request(config, std::move(prompt));
        return cached_complete(provider, request, cache);
    };

    Report& report = result.report;
    for (std::size_t step = 0; step < order.size(); ++step) {
        const IssueExplanation& explanation = explanations[order[step]];
        bool create_new = false;
        std::size_t existing_index = 0;

        if (step == 0) {
            create_new = true;  // first instance is always a new issue type
        } else {
            std::string prompt = render_decision_prompt(lib, report, explanation);
            ++report.run_meta.decision_calls;
            Decision decision = parse_decision(call(prompt).content, report.issue_types.size());
            if (decision.verdict == Decision::Verdict::Invalid) {
                ++report.run_meta.invalid_retries;
                ++report.run_meta.decision_calls;
                std::string retry_prompt =
                    prompt + detail::corrective_decision_suffix(report.issue_types.size());
                decision = parse_decision(call(retry_prompt).content, report.issue_types.size());
                if (decision.verdict == Decision::Verdict::Invalid) {
                    result.warnings.push_back("instance '" + explanation.instance_id +
                                              "': two invalid decisions, treated as new type");
                    decision.verdict = Decision::Verdict::NewType;
                }
            }
            if (decision.verdict == Decision::Verdict::NewType) {
                create_new = true;
            } else {
                existing_index = decision.index;
            }
        }

        if (create_new) {
            std::string prompt = render_new_type_prompt(lib, report, explanation);
            ++report.run_meta.new_type_calls;
            NewTypeParse parsed = parse_new_type(call(prompt).content);
            if (parsed.warning)
                result.warnings.push_back("instance '" + explanation.instance_id +
                                          "': new-type output needed normalization");
            IssueType type;
            type.key = type_key(report.issue_types.size());
            type.label = parsed.label;
            type.description = parsed.description;
            type.count = 1;
            type.members = {explanation.instance_id};
            report.issue_types.push_back(std::move(type));
            result.assignments[explanation.instance_id] = report.issue_types.back().key;
        } else {
            IssueType& type = report.issue_types[existing_index];
            ++type.count;
            type.members.push_back(explanation.instance_id);
            result.assignments[explanation.instance_id] = type.key;
        }
    }

    std::vector<std::string> ids;
    ids.reserve(explanations.size());
    for (const auto& explanation : explanations) ids.push_back(explanation.instance_id);
    validate_report(report, ids);
    return result;
}

/// The direct-prompting baseline: every analysis in one call, response
/// parsed as a structured summary object. Structural correctness is not
/// guaranteed by construction, so the response is reconciled against the
/// explanation ids and violations raise a structural failure. Count
/// mismatches are repaired to the index count with a warning.
inline Report direct_cluster(const std::vector<IssueExplanation>& explanations,
                             const PromptLibrary& lib, Provider& provider,
                             const ProviderConfig& config, ResponseCache* cache,
                             std::vector<std::string>* warnings = nullptr) {
    if (explanations.empty()) throw ConfigError("direct_cluster: no explanations");
    std::string prompt = render_direct_summary_prompt(lib, explanations);
    if (static_cast<long>(prompt.size()) > config.max_prompt_chars) {
        throw GatewayError(GatewayError::Kind::ContextOverflow,
                           "direct summary prompt of " + std::to_string(prompt.size()) +
                               " chars exceeds configured budget of " +
                               std::to_string(config.max_prompt_chars));
    }
    ChatRequest request =
        make_user_request(config, std::move(prompt), ResponseFormat::StructuredObject);
    ChatResponse response = cached_complete(provider, request, cache);

    std::string body = trim(response.content);
    if (body.rfind("```", 0) == 0) {  // fenced code block
        std::size_t first_newline = body.find('\n');
        std::size_t closing = body.rfind("```");
        if (first_newline != std::string::npos && closing > first_newline)
            body = trim(body.substr(first_newline + 1, closing - first_newline - 1));
    }
    nlohmann::ordered_json parsed;
    try {
        parsed = nlohmann::ordered_json::parse(body);
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError("direct summary is not valid JSON",
                              {std::string("parse: ") + ex.what()});
    }
    if (!parsed.is_object() || !parsed.contains("summary") || !parsed["summary"].is_object())
        throw ValidationError("direct summary structurally invalid",
                              {"missing top-level 'summary' object"});

    Report report;
    report.run_meta.model = config.model;
    report.run_meta.algorithm = "direct";
    for (const auto& [name, entry] : parsed["summary"].items()) {
        if (!entry.is_object()) {
            throw ValidationError("direct summary structurally invalid",
                                  {"error type '" + name + "' is not an object"});
        }
        IssueType type;
        type.key = type_key(report.issue_types.size());
        type.label = entry.contains("error_name") && entry["error_name"].is_string()
                         ? entry["error_name"].get<std::string>()
                         : name;
        type.description = entry.value("error_description", std::string{});
        if (entry.contains("indexes") && entry["indexes"].is_array()) {
            for (const auto& index : entry["indexes"]) {
                if (index.is_string())
                    type.members.push_back(index.get<std::string>());
                else if (index.is_number_integer())
                    type.members.push_back(std::to_string(index.get<long long>()));
            }
        }
        type.count = static_cast<int>(type.members.size());
        if (entry.contains("num_examples") && entry["num_examples"].is_number_integer()) {
            int claimed = entry["num_examples"].get<int>();
            if (claimed != type.count && warnings) {
                warnings->push_back("error type '" + type.label + "': num_examples " +
                                    std::to_string(claimed) + " repaired to " +
                                    std::to_string(type.count));
            }
        }
        report.issue_types.push_back(std::move(type));
    }

    std::vector<std::string> ids;
    ids.reserve(explanations.size());
    for (const auto& explanation : explanations) ids.push_back(explanation.instance_id);
    validate_report(report, ids);
    return report;
}

}  // namespace qualjudge
