#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qualjudge/cache.hpp"
#include "qualjudge/chat.hpp"
#include "qualjudge/corpus.hpp"
#include "qualjudge/errors.hpp"
#include "qualjudge/explanations.hpp"
#include "qualjudge/prompts.hpp"
#include "qualjudge/util.hpp"

namespace qualjudge {

struct SummaryParse {
    std::string full_analysis;
    std::string summary;
    std::optional<ParseWarning> warning;
};

/// Split a judge response at the LAST "Summary:" occurrence (matched
/// case-insensitively; models sometimes restate the separator and the final
/// occurrence is the instructed final summary). No separator degrades to
/// the whole text plus a warning. Total function.
inline SummaryParse parse_summary(const std::string& raw) {
    static constexpr std::string_view kSeparator = "summary:";
    SummaryParse out;
    std::size_t pos = rfind_icase(raw, kSeparator);
    if (pos == std::string::npos) {
        out.full_analysis = raw;
        out.summary = trim(raw);
        out.warning = ParseWarning::MissingSeparator;
        return out;
    }
    out.full_analysis = raw.substr(0, pos);
    out.summary = trim(raw.substr(pos + kSeparator.size()));
    if (out.summary.empty()) out.warning = ParseWarning::EmptySummary;
    return out;
}

/// One judge call for one failing instance. Parse problems never error;
/// they degrade to warnings carried on the explanation.
inline IssueExplanation analyze_instance(const Instance& instance, const PromptLibrary& lib,
                                         Provider& provider, const ProviderConfig& config,
                                         ResponseCache* cache) {
    ChatRequest request = make_user_request(config, render_analysis_prompt(lib, instance));
    ChatResponse response = cached_complete(provider, request, cache);
    SummaryParse parsed = parse_summary(response.content);
    IssueExplanation explanation;
    explanation.instance_id = instance.id;
    explanation.full_analysis = std::move(parsed.full_analysis);
    explanation.summary = std::move(parsed.summary);
    explanation.parse_warning = parsed.warning;
    explanation.model = config.model;
    return explanation;
}

struct AnalyzeOptions {
    int parallelism = 1;
    bool fail_fast = true;
};

/// Per-instance analysis over a whole dataset. Calls are independent and
/// run on up to `parallelism` threads; results are returned in dataset
/// order regardless of completion order. In fail-fast mode the first
/// gateway error aborts the run; otherwise failed instances are recorded
/// as empty-summary explanations flagged gateway_error.
inline std::vector<IssueExplanation> analyze_dataset(const Dataset& dataset,
                                                     const PromptLibrary& lib, Provider& provider,
                                                     const ProviderConfig& config,
                                                     ResponseCache* cache,
                                                     const AnalyzeOptions& options = {}) {
    if (dataset.instances.empty()) throw ConfigError("empty dataset");
    return parallel_map<IssueExplanation>(
        dataset.instances.size(), options.parallelism, [&](std::size_t i) {
            const Instance& instance = dataset.instances[i];
            try {
                return analyze_instance(instance, lib, provider, config, cache);
            } catch (const GatewayError& ex) {
                if (options.fail_fast) throw;
                IssueExplanation failed;
                failed.instance_id = instance.id;
                failed.full_analysis = std::string("[gateway error] ") + ex.what();
                failed.summary = "";
                failed.parse_warning = ParseWarning::GatewayError;
                failed.model = config.model;
                return failed;
            }
        });
}

}  // namespace qualjudge
