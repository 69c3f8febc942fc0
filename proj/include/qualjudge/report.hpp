#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qualjudge/errors.hpp"

namespace qualjudge {

/// One cluster in the issue-types report. The key index is the creation
/// index and never changes; display ordering is a rendering concern.
struct IssueType {
    std::string key;  // "type_<k>", k = creation index
    std::string label;
    std::string description;
    int count = 0;
    std::vector<std::string> members;

    bool operator==(const IssueType&) const = default;
};

struct RunMeta {
    std::string model;
    std::string algorithm;  // "cumulative" | "direct"
    std::optional<long> seed;
    std::optional<std::vector<std::size_t>> permutation;
    long decision_calls = 0;
    long new_type_calls = 0;
    long invalid_retries = 0;
    std::string inputs_digest;

    bool operator==(const RunMeta&) const = default;
};

struct Report {
    std::vector<IssueType> issue_types;
    RunMeta run_meta;

    bool operator==(const Report&) const = default;
};

inline std::string type_key(std::size_t index) {
    return "type_" + std::to_string(index);
}

/// Check the report invariants against the clustered ids: contiguous keys,
/// counts matching members, and every id in exactly one members list.
inline void validate_report(const Report& report, const std::vector<std::string>& expected_ids) {
    std::vector<std::string> violations;
    long total = 0;
    std::map<std::string, int> coverage;
    for (const auto& id : expected_ids) coverage[id] = 0;

    for (std::size_t i = 0; i < report.issue_types.size(); ++i) {
        const auto& type = report.issue_types[i];
        if (type.key != type_key(i))
            violations.push_back("key '" + type.key + "' at position " + std::to_string(i));
        if (type.count != static_cast<int>(type.members.size()))
            violations.push_back(type.key + ": count " + std::to_string(type.count) +
                                 " != member count " + std::to_string(type.members.size()));
        if (type.label.empty()) violations.push_back(type.key + ": empty label");
        if (type.description.empty()) violations.push_back(type.key + ": empty description");
        total += type.count;
        for (const auto& id : type.members) {
            auto it = coverage.find(id);
            if (it == coverage.end())
                violations.push_back(type.key + ": unknown member id '" + id + "'");
            else
                ++it->second;
        }
    }
    if (total != static_cast<long>(expected_ids.size()))
        violations.push_back("counts sum to " + std::to_string(total) + ", expected " +
                             std::to_string(expected_ids.size()));
    std::vector<std::string> missing;
    for (const auto& [id, hits] : coverage) {
        if (hits == 0) missing.push_back(id);
        if (hits > 1) violations.push_back("id '" + id + "' appears in " +
                                           std::to_string(hits) + " clusters");
    }
    if (!missing.empty()) {
        std::string ids;
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
            if (i > 0) ids += ", ";
            ids += missing[i];
        }
        violations.push_back("missing ids: " + ids);
    }
    if (!violations.empty()) throw ValidationError("report structurally invalid", violations);
}

/// Display order: descending count, creation order on ties.
inline std::vector<const IssueType*> issue_types_by_count(const Report& report) {
    std::vector<const IssueType*> sorted;
    sorted.reserve(report.issue_types.size());
    for (const auto& type : report.issue_types) sorted.push_back(&type);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const IssueType* a, const IssueType* b) { return a->count > b->count; });
    return sorted;
}

}  // namespace qualjudge
