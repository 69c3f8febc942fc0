#pragma once

#include <optional>
#include <string>

namespace qualjudge {

enum class ParseWarning { MissingSeparator, EmptySummary, GatewayError };

inline std::string to_string(ParseWarning warning) {
    switch (warning) {
        case ParseWarning::MissingSeparator: return "missing_separator";
        case ParseWarning::EmptySummary: return "empty_summary";
        case ParseWarning::GatewayError: return "gateway_error";
    }
    return "missing_separator";
}

/// Step-1 output for one instance: the judge's full analysis plus the short
/// summary found after the "Summary:" separator.
struct IssueExplanation {
    std::string instance_id;
    std::string full_analysis;
    std::string summary;
    std::optional<ParseWarning> parse_warning;
    std::string model;

    bool operator==(const IssueExplanation&) const = default;
};

}  // namespace qualjudge
