// qualjudge CLI: turn per-instance NLG failures into an issue-types report
// and score reports against gold annotations.

#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qualjudge/commands.hpp"
#include "qualjudge/config.hpp"
#include "qualjudge/render.hpp"
#include "qualjudge/runio.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitGateway = 3;
constexpr int kExitValidation = 4;

struct CommonArgs {
    std::string config_path;
    std::string dataset;
    std::string algorithm;
    std::vector<long> seeds;
    int parallelism = 0;
    std::string mock_script;
    std::string out;
    std::string explanations;
};

void add_common_flags(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON run configuration file");
    cmd->add_option("--dataset", args.dataset, "dataset file (line-delimited records)");
    cmd->add_option("--algorithm", args.algorithm, "clustering algorithm: cumulative|direct");
    cmd->add_option("--seeds", args.seeds, "seeds for shuffled multi-run clustering")
        ->delimiter(',');
    cmd->add_option("--parallelism", args.parallelism, "max concurrent judge calls");
    cmd->add_option("--mock-script", args.mock_script,
                    "scripted offline provider (test hook; replaces judge and evaluator)");
    cmd->add_option("--out", args.out, "output directory (default: outputs)");
    cmd->add_option("--explanations", args.explanations,
                    "explanations file override for cluster/evaluate");
}

qualjudge::RunConfig resolve_config(const CommonArgs& args) {
    qualjudge::RunConfig config;
    if (!args.config_path.empty()) config = qualjudge::load_run_config(args.config_path);
    if (!args.dataset.empty()) config.dataset = args.dataset;
    if (!args.algorithm.empty()) config.algorithm = args.algorithm;
    if (!args.seeds.empty()) config.seeds = args.seeds;
    if (args.parallelism > 0) config.parallelism = args.parallelism;
    if (!args.mock_script.empty()) config.mock_script = args.mock_script;
    if (!args.out.empty()) config.output_dir = args.out;
    if (!args.explanations.empty()) config.explanations_path = args.explanations;
    if (config.algorithm != "cumulative" && config.algorithm != "direct")
        throw qualjudge::ConfigError("algorithm must be 'cumulative' or 'direct'");
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qualjudge: qualitative failure reports for NLG systems"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string gold_path, meta_path, spec_path, report_path;

    CLI::App* analyze = app.add_subcommand(
        "analyze", "detect failures and produce one issue explanation per instance");
    add_common_flags(analyze, args);

    CLI::App* cluster = app.add_subcommand(
        "cluster", "group issue explanations into an issue-types report");
    add_common_flags(cluster, args);

    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "score reports against gold annotations (ARI, SLC, accuracy)");
    add_common_flags(evaluate, args);
    evaluate->add_option("--gold", gold_path, "gold annotations file")->required();

    CLI::App* synth = app.add_subcommand(
        "synth", "generate synthetic explanations from an issue-type inventory");
    add_common_flags(synth, args);
    synth->add_option("--spec", spec_path, "synthetic spec file")->required();

    CLI::App* meta = app.add_subcommand(
        "meta-eval", "measure evaluator agreement with human equivalence verdicts");
    add_common_flags(meta, args);
    meta->add_option("--meta", meta_path, "meta-evaluation items file")->required();

    CLI::App* render = app.add_subcommand("render", "render a report file as markdown");
    render->add_option("--report", report_path, "report file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        int code = app.exit(ex);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (analyze->parsed()) {
            qualjudge::cmd_analyze(resolve_config(args));
        } else if (cluster->parsed()) {
            qualjudge::cmd_cluster(resolve_config(args));
        } else if (evaluate->parsed()) {
            qualjudge::cmd_evaluate(resolve_config(args), gold_path);
        } else if (synth->parsed()) {
            qualjudge::cmd_synth(spec_path, resolve_config(args),
                                 std::filesystem::path(args.out));
        } else if (meta->parsed()) {
            qualjudge::cmd_meta_eval(resolve_config(args), meta_path);
        } else if (render->parsed()) {
            std::cout << qualjudge::render_markdown(qualjudge::load_report(report_path));
        }
    } catch (const qualjudge::ConfigError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const qualjudge::ParseError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const qualjudge::GatewayError& ex) {
        std::cerr << "gateway error: " << ex.what() << "\n";
        return kExitGateway;
    } catch (const qualjudge::ValidationError& ex) {
        std::cerr << "validation error: " << ex.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
