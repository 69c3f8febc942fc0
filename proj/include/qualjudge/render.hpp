#pragma once

#include <string>

#include "qualjudge/report.hpp"
#include "qualjudge/util.hpp"

namespace qualjudge {

namespace detail {

inline std::string markdown_cell(const std::string& text) {
    std::string cell = trim(collapse_newlines(text));
    std::string out;
    for (char c : cell) {
        if (c == '|') out += "\\|";
        else out += c;
    }
    return out;
}

}  // namespace detail

/// Issue-types table sorted by descending count (creation order on ties),
/// with a totals row.
inline std::string render_markdown(const Report& report) {
    std::string out;
    out += "| Issue type | Cnt | Description |\n";
    out += "|---|---:|---|\n";
    long total = 0;
    for (const IssueType* type : issue_types_by_count(report)) {
        out += "| " + detail::markdown_cell(type->label) + " | " + std::to_string(type->count) +
               " | " + detail::markdown_cell(type->description) + " |\n";
        total += type->count;
    }
    out += "| **Total** | " + std::to_string(total) + " |  |\n";
    return out;
}

}  // namespace qualjudge
