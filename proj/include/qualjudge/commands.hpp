#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "qualjudge/analysis.hpp"
#include "qualjudge/cache.hpp"
#include "qualjudge/clustering.hpp"
#include "qualjudge/config.hpp"
#include "qualjudge/corpus.hpp"
#include "qualjudge/evalkit.hpp"
#include "qualjudge/render.hpp"
#include "qualjudge/report.hpp"
#include "qualjudge/runio.hpp"
#include "qualjudge/util.hpp"

namespace qualjudge {

namespace detail {

inline std::string timestamp_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", std::gmtime(&t));
    return buf;
}

}  // namespace detail

/// Run directory layout: <output_dir>/run-<digest12>/. The id is derived
/// from the dataset content, so identical inputs land in the same place and
/// reruns overwrite with identical bytes. Timestamps go to the log only;
/// output files stay byte-reproducible.
class RunDir {
public:
    RunDir(std::filesystem::path output_dir, std::string inputs_digest,
           std::string dataset_label)
        : inputs_digest_(std::move(inputs_digest)), dataset_label_(std::move(dataset_label)) {
        dir_ = output_dir / ("run-" + inputs_digest_.substr(0, 12));
        std::filesystem::create_directories(dir_);
    }

    const std::filesystem::path& dir() const { return dir_; }
    const std::string& inputs_digest() const { return inputs_digest_; }
    std::filesystem::path file(const std::string& name) const { return dir_ / name; }

    void log(const std::string& line) const {
        std::ofstream out(dir_ / "log.txt", std::ios::app);
        out << detail::timestamp_now() << " " << line << "\n";
    }

    void record_files(const std::vector<std::string>& names) const {
        std::set<std::string> files;
        auto manifest_path = dir_ / "run.json";
        if (std::filesystem::exists(manifest_path)) {
            try {
                auto j = nlohmann::json::parse(read_text_file(manifest_path));
                for (const auto& f : j.value("files", std::vector<std::string>{}))
                    files.insert(f);
            } catch (const std::exception&) {
                // manifest rewritten from scratch
            }
        }
        for (const auto& name : names) files.insert(name);
        nlohmann::ordered_json j;
        j["run_id"] = "run-" + inputs_digest_.substr(0, 12);
        j["inputs_digest"] = inputs_digest_;
        j["dataset"] = dataset_label_;
        j["files"] = std::vector<std::string>(files.begin(), files.end());
        write_text_file_atomic(manifest_path, j.dump(2) + "\n");
    }

private:
    std::filesystem::path dir_;
    std::string inputs_digest_;
    std::string dataset_label_;
};

/// The run id comes from the dataset content; explanations-only flows
/// (clustering synthetic data) fall back to the explanations file digest.
inline RunDir open_run_dir(const RunConfig& config) {
    if (!config.dataset.empty()) {
        if (!std::filesystem::exists(config.dataset))
            throw ConfigError("dataset not found: " + config.dataset.string());
        return RunDir(config.output_dir, file_digest(config.dataset), config.dataset.string());
    }
    if (!config.explanations_path.empty()) {
        if (!std::filesystem::exists(config.explanations_path))
            throw ConfigError("explanations file not found: " +
                              config.explanations_path.string());
        return RunDir(config.output_dir, file_digest(config.explanations_path),
                      config.explanations_path.string());
    }
    throw ConfigError("config: dataset path required (or --explanations)");
}

inline std::unique_ptr<ResponseCache> open_cache(const RunConfig& config) {
    if (config.cache_dir.empty()) return nullptr;
    return std::make_unique<ResponseCache>(config.cache_dir);
}

struct AnalyzeResult {
    std::filesystem::path explanations_path;
    std::size_t failures = 0;
    std::size_t warnings = 0;
    std::uint64_t provider_calls = 0;
};

/// analyze: filter failures, run per-instance analysis, write explanations.
inline AnalyzeResult cmd_analyze(const RunConfig& config) {
    if (config.dataset.empty()) throw ConfigError("analyze requires a dataset");
    RunDir run = open_run_dir(config);
    PromptLibrary lib = load_prompts(config);
    Dataset dataset = load_dataset(config.dataset);
    Dataset failures = filter_failures(dataset, config.failure_threshold);

    AnalyzeResult result;
    result.explanations_path = run.file("explanations.jsonl");

    std::vector<IssueExplanation> explanations;
    if (!failures.instances.empty()) {
        auto provider = build_provider(config, ProviderRole::Judge);
        auto cache = open_cache(config);
        AnalyzeOptions options;
        options.parallelism = config.parallelism;
        explanations = analyze_dataset(failures, lib, *provider,
                                       effective_provider_config(config, ProviderRole::Judge),
                                       cache.get(), options);
        result.provider_calls = provider->calls();
    }
    save_explanations(explanations, result.explanations_path);
    run.record_files({"explanations.jsonl"});

    result.failures = failures.instances.size();
    for (const auto& explanation : explanations) {
        if (explanation.parse_warning) {
            ++result.warnings;
            run.log("parse warning (" + to_string(*explanation.parse_warning) +
                    ") for instance " + explanation.instance_id);
        }
    }
    run.log("analyze: " + std::to_string(result.failures) + " failures, " +
            std::to_string(result.warnings) + " warnings, " +
            std::to_string(result.provider_calls) + " provider calls");
    std::cout << "analyzed " << result.failures << " failures (" << result.warnings
              << " warnings) -> " << result.explanations_path.string() << "\n"
              << "provider calls: " << result.provider_calls << "\n";
    return result;
}

struct ClusterCmdResult {
    std::vector<std::filesystem::path> report_paths;
    std::vector<Report> reports;
    std::uint64_t provider_calls = 0;
};

/// cluster: run the chosen algorithm once per seed (once in dataset order
/// when no seeds are given) and write one report per run.
inline ClusterCmdResult cmd_cluster(const RunConfig& config) {
    RunDir run = open_run_dir(config);
    PromptLibrary lib = load_prompts(config);
    auto explanations_path = config.explanations_path.empty() ? run.file("explanations.jsonl")
                                                              : config.explanations_path;
    if (!std::filesystem::exists(explanations_path))
        throw ConfigError("explanations file not found (run analyze first): " +
                          explanations_path.string());
    std::vector<IssueExplanation> explanations = load_explanations(explanations_path);
    if (explanations.empty()) throw ConfigError("no explanations to cluster");

    auto provider = build_provider(config, ProviderRole::Judge);
    auto cache = open_cache(config);
    ProviderConfig provider_config = effective_provider_config(config, ProviderRole::Judge);

    std::vector<std::optional<long>> seeds;
    if (config.seeds.empty())
        seeds.push_back(std::nullopt);
    else
        for (long seed : config.seeds) seeds.push_back(seed);

    ClusterCmdResult result;
    std::vector<std::string> written;
    for (const auto& seed : seeds) {
        Report report;
        std::map<std::string, std::string> assignments;
        std::vector<std::string> warnings;
        if (config.algorithm == "direct") {
            report = direct_cluster(explanations, lib, *provider, provider_config, cache.get(),
                                    &warnings);
            report.run_meta.seed = seed;
            for (const auto& type : report.issue_types)
                for (const auto& id : type.members) assignments[id] = type.key;
        } else {
            ClusterResult clustered = cumulative_cluster(explanations, lib, *provider,
                                                         provider_config, cache.get(), seed);
            report = std::move(clustered.report);
            assignments = std::move(clustered.assignments);
            warnings = std::move(clustered.warnings);
        }
        report.run_meta.inputs_digest = run.inputs_digest();

        std::string suffix = seed ? "-seed" + std::to_string(*seed) : "";
        auto report_path = run.file("report" + suffix + ".json");
        save_report(report, report_path);
        save_assignments(assignments, run.file("assignments" + suffix + ".jsonl"));
        written.push_back("report" + suffix + ".json");
        written.push_back("assignments" + suffix + ".jsonl");
        for (const auto& warning : warnings) run.log("cluster: " + warning);
        run.log("cluster (" + config.algorithm + suffix + "): " +
                std::to_string(report.issue_types.size()) + " issue types over " +
                std::to_string(explanations.size()) + " explanations");

        std::cout << "issue types report (" << config.algorithm
                  << (seed ? ", seed " + std::to_string(*seed) : "") << "):\n"
                  << render_markdown(report) << "\n";
        result.report_paths.push_back(report_path);
        result.reports.push_back(std::move(report));
    }
    run.record_files(written);
    result.provider_calls = provider->calls();
    std::cout << "provider calls: " << result.provider_calls << "\n";
    return result;
}

struct EvaluateResult {
    std::filesystem::path metrics_path;
    MeanStd ari;
    MeanStd slc;
    std::vector<double> ari_per_seed;
    std::vector<double> slc_per_seed;
    double per_instance_accuracy = 0.0;
    std::uint64_t provider_calls = 0;
};

/// evaluate: ARI, optimal mapping, confusion matrix, and SLC per report,
/// plus per-instance accuracy of the explanations; multi-seed runs are
/// aggregated as mean +/- population standard deviation.
inline EvaluateResult cmd_evaluate(const RunConfig& config, const std::filesystem::path& gold_path) {
    RunDir run = open_run_dir(config);
    if (!std::filesystem::exists(gold_path))
        throw ConfigError("gold annotations not found: " + gold_path.string());
    PromptLibrary lib = load_prompts(config);
    std::vector<GoldAnnotation> gold = load_gold(gold_path);
    if (gold.empty()) throw ConfigError("gold file is empty: " + gold_path.string());

    if (config.mock_script.empty() && config.has_judge && config.has_evaluator &&
        config.judge.name == config.evaluator.name && config.judge.model == config.evaluator.model) {
        std::cerr << "[qualjudge] warning: evaluator provider equals the judged provider; "
                     "use a distinct evaluator\n";
        run.log("warning: evaluator provider equals judge provider");
    }

    auto explanations_path = config.explanations_path.empty() ? run.file("explanations.jsonl")
                                                              : config.explanations_path;
    std::vector<IssueExplanation> explanations = load_explanations(explanations_path);

    auto provider = build_provider(config, ProviderRole::Evaluator);
    auto cache = open_cache(config);
    EquivalenceJudge judge(lib, *provider,
                           effective_provider_config(config, ProviderRole::Evaluator),
                           cache.get());

    Partition gold_parts = gold_partition(gold);
    Report reference = gold_report(gold);

    std::vector<std::optional<long>> seeds;
    if (config.seeds.empty())
        seeds.push_back(std::nullopt);
    else
        for (long seed : config.seeds) seeds.push_back(seed);

    EvaluateResult result;
    nlohmann::ordered_json runs = nlohmann::ordered_json::array();
    for (const auto& seed : seeds) {
        std::string suffix = seed ? "-seed" + std::to_string(*seed) : "";
        auto report_path = run.file("report" + suffix + ".json");
        if (!std::filesystem::exists(report_path))
            throw ConfigError("report not found (run cluster first): " + report_path.string());
        Report predicted = load_report(report_path);

        Partition predicted_parts = Partition::from_report(predicted);
        double ari = adjusted_rand_index(gold_parts, predicted_parts);

        ContingencyMatrix m = contingency(Partition::from_report(reference), predicted_parts);
        ClusterMapping mapping = optimal_mapping(m);
        std::vector<std::string> row_names, col_names;
        for (const auto& type : reference.issue_types) row_names.push_back(type.label);
        for (const auto& type : predicted.issue_types) col_names.push_back(type.label);
        ConfusionReport confusion = confusion_report(m, mapping, &row_names, &col_names);
        double slc = semantic_label_consistency(reference, predicted, mapping, judge);

        result.ari_per_seed.push_back(ari);
        result.slc_per_seed.push_back(slc);

        nlohmann::ordered_json entry;
        entry["seed"] = seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json(nullptr);
        entry["report_file"] = "report" + suffix + ".json";
        entry["ari"] = ari;
        entry["slc"] = slc;
        auto mapped = nlohmann::ordered_json::array();
        for (const auto& [i, j] : mapping.pairs)
            mapped.push_back({reference.issue_types[i].label, predicted.issue_types[j].label});
        entry["mapping"] = std::move(mapped);
        entry["mapping_objective"] = mapping.objective;
        entry["confusion"] = {{"row_labels", confusion.row_labels},
                              {"col_labels", confusion.col_labels},
                              {"matrix", confusion.matrix}};
        runs.push_back(std::move(entry));
        std::cout << "confusion matrix (gold rows x predicted cols" << suffix << "):\n"
                  << confusion.text;
    }

    result.per_instance_accuracy = per_instance_accuracy(explanations, gold, judge);
    result.ari = aggregate_scores(result.ari_per_seed);
    result.slc = aggregate_scores(result.slc_per_seed);
    result.provider_calls = provider->calls();
    for (const auto& warning : judge.warnings()) run.log("evaluate: " + warning);

    nlohmann::ordered_json metrics;
    metrics["per_instance_accuracy"] = result.per_instance_accuracy;
    metrics["ari"] = {{"mean", result.ari.mean},
                      {"std", result.ari.stddev},
                      {"per_seed", result.ari_per_seed}};
    metrics["slc"] = {{"mean", result.slc.mean},
                      {"std", result.slc.stddev},
                      {"per_seed", result.slc_per_seed}};
    metrics["gold_clusters"] = reference.issue_types.size();
    metrics["evaluator_model"] =
        effective_provider_config(config, ProviderRole::Evaluator).model;
    metrics["runs"] = std::move(runs);
    result.metrics_path = run.file("metrics.json");
    write_text_file_atomic(result.metrics_path, metrics.dump(2) + "\n");
    run.record_files({"metrics.json"});
    run.log("evaluate: ari " + format_mean_std(result.ari) + ", slc " +
            format_mean_std(result.slc) + ", accuracy " +
            format_fixed(result.per_instance_accuracy, 3));

    std::cout << "ARI " << format_mean_std(result.ari) << "\n"
              << "SLC " << format_mean_std(result.slc) << "\n"
              << "per-instance accuracy " << format_fixed(result.per_instance_accuracy, 3) << "\n"
              << "provider calls: " << result.provider_calls << "\n";
    return result;
}

struct SynthResult {
    std::filesystem::path explanations_path;
    std::filesystem::path gold_path;
    std::size_t total = 0;
    std::uint64_t provider_calls = 0;
};

/// synth: reformulate each issue type frequency-many times and emit a
/// synthetic explanations file plus its hidden gold partition.
inline SynthResult cmd_synth(const std::filesystem::path& spec_path, const RunConfig& config,
                             std::filesystem::path out_dir = {}) {
    if (!std::filesystem::exists(spec_path))
        throw ConfigError("synthetic spec not found: " + spec_path.string());
    SyntheticSpec spec = load_synthetic_spec(spec_path);
    PromptLibrary lib = load_prompts(config);
    auto provider = build_provider(config, ProviderRole::Judge);
    auto cache = open_cache(config);
    SyntheticSet set = generate_synthetic(spec, lib, *provider,
                                          effective_provider_config(config, ProviderRole::Judge),
                                          cache.get());

    if (out_dir.empty())
        out_dir = config.output_dir / ("synth-" + spec_path.stem().string());
    std::filesystem::create_directories(out_dir);

    SynthResult result;
    result.explanations_path = out_dir / "explanations.jsonl";
    result.gold_path = out_dir / "gold.jsonl";
    save_explanations(set.explanations, result.explanations_path);
    save_synthetic_gold(spec, set, result.gold_path);
    result.total = set.explanations.size();
    result.provider_calls = provider->calls();
    std::cout << "synthesized " << result.total << " explanations over "
              << spec.issue_types.size() << " issue types -> " << out_dir.string() << "\n";
    return result;
}

/// meta-eval: agreement between the evaluator model and human equivalence
/// verdicts.
inline double cmd_meta_eval(const RunConfig& config, const std::filesystem::path& meta_path) {
    if (!std::filesystem::exists(meta_path))
        throw ConfigError("meta-evaluation file not found: " + meta_path.string());
    std::vector<MetaItem> items = load_meta_items(meta_path);
    if (items.empty()) throw ConfigError("meta-evaluation file is empty");
    PromptLibrary lib = load_prompts(config);
    auto provider = build_provider(config, ProviderRole::Evaluator);
    auto cache = open_cache(config);
    EquivalenceJudge judge(lib, *provider,
                           effective_provider_config(config, ProviderRole::Evaluator),
                           cache.get());
    double accuracy = meta_evaluate(items, judge);
    std::cout << "meta-evaluation accuracy " << format_fixed(accuracy, 3) << " over "
              << items.size() << " items\n";
    return accuracy;
}

}  // namespace qualjudge
