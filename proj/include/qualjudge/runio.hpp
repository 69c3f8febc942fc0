#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "qualjudge/errors.hpp"
#include "qualjudge/evalkit.hpp"
#include "qualjudge/explanations.hpp"
#include "qualjudge/report.hpp"
#include "qualjudge/sha256.hpp"
#include "qualjudge/util.hpp"

namespace qualjudge {

inline nlohmann::ordered_json explanation_to_json(const IssueExplanation& explanation) {
    nlohmann::ordered_json j;
    j["instance_id"] = explanation.instance_id;
    j["full_analysis"] = explanation.full_analysis;
    j["summary"] = explanation.summary;
    if (explanation.parse_warning) j["parse_warning"] = to_string(*explanation.parse_warning);
    j["model"] = explanation.model;
    return j;
}

inline IssueExplanation explanation_from_json(const nlohmann::json& j, const std::string& where) {
    IssueExplanation explanation;
    try {
        explanation.instance_id = j.at("instance_id").get<std::string>();
        explanation.full_analysis = j.value("full_analysis", std::string{});
        explanation.summary = j.at("summary").get<std::string>();
        if (j.contains("parse_warning")) {
            std::string warning = j.at("parse_warning").get<std::string>();
            if (warning == "missing_separator")
                explanation.parse_warning = ParseWarning::MissingSeparator;
            else if (warning == "empty_summary")
                explanation.parse_warning = ParseWarning::EmptySummary;
            else if (warning == "gateway_error")
                explanation.parse_warning = ParseWarning::GatewayError;
            else
                throw ParseError(where + ": unknown parse_warning '" + warning + "'");
        }
        explanation.model = j.value("model", std::string{});
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(where + ": " + ex.what());
    }
    return explanation;
}

inline void save_explanations(const std::vector<IssueExplanation>& explanations,
                              const std::filesystem::path& path) {
    std::string out;
    for (const auto& explanation : explanations) {
        out += explanation_to_json(explanation).dump();
        out += '\n';
    }
    write_text_file_atomic(path, out);
}

inline std::vector<IssueExplanation> load_explanations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open explanations file: " + path.string());
    std::vector<IssueExplanation> out;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::string where = path.filename().string() + ":" + std::to_string(line_no);
        try {
            out.push_back(explanation_from_json(nlohmann::json::parse(line), where));
        } catch (const nlohmann::json::exception& ex) {
            throw ParseError(where + ": " + ex.what());
        }
        if (!seen.insert(out.back().instance_id).second)
            throw ParseError(where + ": duplicate instance_id '" + out.back().instance_id + "'");
    }
    return out;
}

inline nlohmann::ordered_json report_to_json(const Report& report) {
    nlohmann::ordered_json j;
    auto types = nlohmann::ordered_json::array();
    for (const auto& type : report.issue_types) {
        nlohmann::ordered_json t;
        t["key"] = type.key;
        t["label"] = type.label;
        t["description"] = type.description;
        t["count"] = type.count;
        t["members"] = type.members;
        types.push_back(std::move(t));
    }
    j["issue_types"] = std::move(types);
    nlohmann::ordered_json meta;
    meta["model"] = report.run_meta.model;
    meta["algorithm"] = report.run_meta.algorithm;
    meta["seed"] = report.run_meta.seed ? nlohmann::ordered_json(*report.run_meta.seed)
                                        : nlohmann::ordered_json(nullptr);
    meta["permutation"] = report.run_meta.permutation
                              ? nlohmann::ordered_json(*report.run_meta.permutation)
                              : nlohmann::ordered_json(nullptr);
    meta["decision_calls"] = report.run_meta.decision_calls;
    meta["new_type_calls"] = report.run_meta.new_type_calls;
    meta["invalid_retries"] = report.run_meta.invalid_retries;
    meta["inputs_digest"] = report.run_meta.inputs_digest;
    j["run_meta"] = std::move(meta);
    return j;
}

inline Report report_from_json(const nlohmann::json& j) {
    Report report;
    for (const auto& t : j.at("issue_types")) {
        IssueType type;
        type.key = t.at("key").get<std::string>();
        type.label = t.at("label").get<std::string>();
        type.description = t.at("description").get<std::string>();
        type.count = t.at("count").get<int>();
        type.members = t.at("members").get<std::vector<std::string>>();
        report.issue_types.push_back(std::move(type));
    }
    const auto& meta = j.at("run_meta");
    report.run_meta.model = meta.value("model", std::string{});
    report.run_meta.algorithm = meta.value("algorithm", std::string{});
    if (meta.contains("seed") && !meta.at("seed").is_null())
        report.run_meta.seed = meta.at("seed").get<long>();
    if (meta.contains("permutation") && !meta.at("permutation").is_null())
        report.run_meta.permutation = meta.at("permutation").get<std::vector<std::size_t>>();
    report.run_meta.decision_calls = meta.value("decision_calls", 0L);
    report.run_meta.new_type_calls = meta.value("new_type_calls", 0L);
    report.run_meta.invalid_retries = meta.value("invalid_retries", 0L);
    report.run_meta.inputs_digest = meta.value("inputs_digest", std::string{});
    return report;
}

inline void save_report(const Report& report, const std::filesystem::path& path) {
    write_text_file_atomic(path, report_to_json(report).dump(2) + "\n");
}

inline Report load_report(const std::filesystem::path& path) {
    try {
        return report_from_json(nlohmann::json::parse(read_text_file(path)));
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(path.string() + ": " + ex.what());
    }
}

inline void save_assignments(const std::map<std::string, std::string>& assignments,
                             const std::filesystem::path& path) {
    std::string out;
    for (const auto& [id, key] : assignments) {
        nlohmann::ordered_json j;
        j["instance_id"] = id;
        j["key"] = key;
        out += j.dump();
        out += '\n';
    }
    write_text_file_atomic(path, out);
}

inline std::vector<GoldAnnotation> load_gold(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open gold file: " + path.string());
    std::vector<GoldAnnotation> out;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::string where = path.filename().string() + ":" + std::to_string(line_no);
        try {
            auto j = nlohmann::json::parse(line);
            GoldAnnotation annotation;
            annotation.instance_id = j.at("instance_id").get<std::string>();
            annotation.gold_explanation = j.at("gold_explanation").get<std::string>();
            annotation.gold_cluster_label = j.at("gold_cluster_label").get<std::string>();
            annotation.gold_cluster_name = j.value("gold_cluster_name", std::string{});
            if (!seen.insert(annotation.instance_id).second)
                throw ParseError(where + ": duplicate instance_id '" + annotation.instance_id + "'");
            out.push_back(std::move(annotation));
        } catch (const nlohmann::json::exception& ex) {
            throw ParseError(where + ": " + ex.what());
        }
    }
    return out;
}

inline Partition gold_partition(const std::vector<GoldAnnotation>& gold) {
    Partition partition;
    for (const auto& annotation : gold)
        partition.set(annotation.instance_id, annotation.gold_cluster_label);
    return partition;
}

/// Assemble a Report-shaped view of the gold annotations: clusters in
/// first-appearance order, named by the annotator's cluster name.
inline Report gold_report(const std::vector<GoldAnnotation>& gold) {
    Report report;
    report.run_meta.model = "annotator";
    report.run_meta.algorithm = "gold";
    std::map<std::string, std::size_t> index;
    for (const auto& annotation : gold) {
        auto it = index.find(annotation.gold_cluster_label);
        if (it == index.end()) {
            it = index.emplace(annotation.gold_cluster_label, report.issue_types.size()).first;
            IssueType type;
            type.key = type_key(report.issue_types.size());
            type.label = annotation.gold_cluster_name.empty() ? annotation.gold_cluster_label
                                                              : annotation.gold_cluster_name;
            type.description = type.label;
            report.issue_types.push_back(std::move(type));
        }
        IssueType& type = report.issue_types[it->second];
        ++type.count;
        type.members.push_back(annotation.instance_id);
    }
    return report;
}

inline std::vector<MetaItem> load_meta_items(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open meta-evaluation file: " + path.string());
    std::vector<MetaItem> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::string where = path.filename().string() + ":" + std::to_string(line_no);
        try {
            auto j = nlohmann::json::parse(line);
            MetaItem item;
            item.explanation_a = j.at("explanation_a").get<std::string>();
            item.explanation_b = j.at("explanation_b").get<std::string>();
            item.human_verdict = j.at("human_verdict").get<bool>();
            out.push_back(std::move(item));
        } catch (const nlohmann::json::exception& ex) {
            throw ParseError(where + ": " + ex.what());
        }
    }
    return out;
}

inline SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
    SyntheticSpec spec;
    try {
        auto j = nlohmann::json::parse(read_text_file(path));
        spec.seed = j.value("seed", 0L);
        for (const auto& t : j.at("issue_types")) {
            SyntheticIssueType type;
            type.name = t.value("name", std::string{});
            type.description = t.at("description").get<std::string>();
            type.frequency = t.at("frequency").get<int>();
            spec.issue_types.push_back(std::move(type));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(path.string() + ": " + ex.what());
    }
    return spec;
}

/// Gold file for a synthetic set: the canonical description is the gold
/// explanation, so the output plugs straight into evaluate.
inline void save_synthetic_gold(const SyntheticSpec& spec, const SyntheticSet& set,
                                const std::filesystem::path& path) {
    std::map<std::string, const SyntheticIssueType*> by_label;
    for (std::size_t k = 0; k < spec.issue_types.size(); ++k) {
        const auto& type = spec.issue_types[k];
        by_label[type.name.empty() ? "e" + std::to_string(k) : type.name] = &type;
    }
    std::string out;
    for (const auto& explanation : set.explanations) {
        const std::string& label = set.gold.labels().at(explanation.instance_id);
        nlohmann::ordered_json j;
        j["instance_id"] = explanation.instance_id;
        j["gold_explanation"] = by_label.at(label)->description;
        j["gold_cluster_label"] = label;
        j["gold_cluster_name"] = label;
        out += j.dump();
        out += '\n';
    }
    write_text_file_atomic(path, out);
}

inline std::string file_digest(const std::filesystem::path& path) {
    return sha256_hex(read_text_file(path));
}

}  // namespace qualjudge
