#include <doctest.h>

#include <random>

#include "qualjudge/analysis.hpp"
#include "helpers.hpp"

using namespace qualjudge;
using testutil::make_instance;
using testutil::mock_config;
using testutil::prompts;

TEST_CASE("parse_summary splits at the separator") {
    auto parsed = parse_summary(
        "The response mentions May twice and never names the date.\n"
        "Summary: The response omits the required date.");
    CHECK(parsed.summary == "The response omits the required date.");
    CHECK(parsed.full_analysis ==
          "The response mentions May twice and never names the date.\n");
    CHECK_FALSE(parsed.warning.has_value());
}

TEST_CASE("parse_summary uses the last separator occurrence") {
    auto parsed = parse_summary("A. Summary: B. Summary: C");
    CHECK(parsed.summary == "C");
    CHECK(parsed.full_analysis == "A. Summary: B. ");
}

TEST_CASE("parse_summary without separator degrades with a warning") {
    auto parsed = parse_summary("no separator here");
    CHECK(parsed.summary == "no separator here");
    CHECK(parsed.warning == ParseWarning::MissingSeparator);
}

TEST_CASE("parse_summary flags an empty summary") {
    auto parsed = parse_summary("All the analysis.\nSummary:");
    CHECK(parsed.summary.empty());
    CHECK(parsed.warning == ParseWarning::EmptySummary);
}

TEST_CASE("parse_summary splits on a lowercase mid-sentence token too") {
    // documented hazard of the case-insensitive separator rule
    auto parsed = parse_summary("the executive summary: everything failed");
    CHECK(parsed.summary == "everything failed");
    CHECK(parsed.full_analysis == "the executive ");
    CHECK_FALSE(parsed.warning.has_value());
}

TEST_CASE("parse_summary recovers a trimmed suffix appended after the separator") {
    std::mt19937 rng(4242);
    for (int trial = 0; trial < 500; ++trial) {
        std::string body = testutil::random_text(rng, 60);
        std::string tail = testutil::random_text(rng, 30);
        if (rfind_icase(tail, "summary:") != std::string::npos) continue;
        auto parsed = parse_summary(body + "Summary: " + tail);
        CAPTURE(body);
        CAPTURE(tail);
        CHECK(parsed.summary == trim(tail));
    }
}

TEST_CASE("analyze_instance parses the scripted judge output") {
    MockProvider mock({{match_any(),
                        respond_fixed("The date is missing from the reply.\n"
                                      "Summary: The response omits the required date.")}});
    IssueExplanation explanation =
        analyze_instance(make_instance("i1"), prompts(), mock, mock_config(), nullptr);
    CHECK(explanation.instance_id == "i1");
    CHECK(explanation.summary == "The response omits the required date.");
    CHECK(explanation.model == "mock-model");
    CHECK_FALSE(explanation.parse_warning.has_value());
}

TEST_CASE("analyze_instance carries parse warnings instead of failing") {
    MockProvider no_separator({{match_any(), respond_fixed("just text, no marker")}});
    auto explanation =
        analyze_instance(make_instance("i2"), prompts(), no_separator, mock_config(), nullptr);
    CHECK(explanation.parse_warning == ParseWarning::MissingSeparator);
    CHECK(explanation.summary == "just text, no marker");

    MockProvider empty_summary({{match_any(), respond_fixed("Summary:")}});
    auto degenerate =
        analyze_instance(make_instance("i3"), prompts(), empty_summary, mock_config(), nullptr);
    CHECK(degenerate.parse_warning == ParseWarning::EmptySummary);
    CHECK(degenerate.summary.empty());
}

namespace {

Dataset echo_dataset(int n) {
    Dataset dataset;
    for (int i = 1; i <= n; ++i) {
        Instance instance = testutil::make_instance("id" + std::to_string(i),
                                                    "question <" + std::to_string(i) + ">");
        dataset.instances.push_back(instance);
    }
    return dataset;
}

// answers every analysis request with a summary echoing the instance marker
std::vector<ScriptRule> echo_script(int n) {
    std::vector<ScriptRule> script;
    for (int i = 1; i <= n; ++i) {
        script.push_back({match_contains("question <" + std::to_string(i) + ">"),
                          respond_fixed("analysis body\nSummary: issue for id" +
                                        std::to_string(i))});
    }
    return script;
}

}  // namespace

TEST_CASE("analyze_dataset returns explanations in dataset order") {
    Dataset dataset = echo_dataset(3);
    MockProvider mock(echo_script(3));
    auto explanations = analyze_dataset(dataset, prompts(), mock, mock_config(), nullptr);
    REQUIRE(explanations.size() == 3);
    CHECK(explanations[0].instance_id == "id1");
    CHECK(explanations[0].summary == "issue for id1");
    CHECK(explanations[1].instance_id == "id2");
    CHECK(explanations[2].instance_id == "id3");
}

TEST_CASE("analyze_dataset output is invariant to the parallelism level") {
    Dataset dataset = echo_dataset(12);
    std::vector<std::vector<IssueExplanation>> results;
    for (int parallelism : {1, 2, 8}) {
        MockProvider mock(echo_script(12));
        AnalyzeOptions options;
        options.parallelism = parallelism;
        results.push_back(
            analyze_dataset(dataset, prompts(), mock, mock_config(), nullptr, options));
        CHECK(mock.calls() == 12);
    }
    CHECK(results[0] == results[1]);
    CHECK(results[0] == results[2]);
}

TEST_CASE("analyze_dataset rejects an empty dataset") {
    Dataset dataset;
    MockProvider mock({{match_any(), respond_fixed("x")}});
    try {
        analyze_dataset(dataset, prompts(), mock, mock_config(), nullptr);
        FAIL("expected empty-dataset error");
    } catch (const ConfigError& ex) {
        CHECK(std::string(ex.what()).find("empty dataset") != std::string::npos);
    }
}

TEST_CASE("analyze_dataset fail-fast aborts on gateway errors") {
    Dataset dataset = echo_dataset(3);
    // only instance 1 and 3 scripted; instance 2 hits a scripted gap
    std::vector<ScriptRule> script = {
        {match_contains("question <1>"), respond_fixed("Summary: one")},
        {match_contains("question <3>"), respond_fixed("Summary: three")},
    };
    MockProvider mock(script);
    CHECK_THROWS_AS(analyze_dataset(dataset, prompts(), mock, mock_config(), nullptr),
                    GatewayError);
}

TEST_CASE("analyze_dataset records gateway failures when not failing fast") {
    Dataset dataset = echo_dataset(3);
    std::vector<ScriptRule> script = {
        {match_contains("question <1>"), respond_fixed("Summary: one")},
        {match_contains("question <3>"), respond_fixed("Summary: three")},
    };
    MockProvider mock(script);
    AnalyzeOptions options;
    options.fail_fast = false;
    auto explanations =
        analyze_dataset(dataset, prompts(), mock, mock_config(), nullptr, options);
    REQUIRE(explanations.size() == 3);
    CHECK(explanations[0].summary == "one");
    CHECK(explanations[1].summary.empty());
    CHECK(explanations[1].parse_warning == ParseWarning::GatewayError);
    CHECK(explanations[2].summary == "three");
}

TEST_CASE("analyze_dataset is deterministic under the mock provider") {
    Dataset dataset = echo_dataset(6);
    MockProvider first(echo_script(6));
    MockProvider second(echo_script(6));
    AnalyzeOptions options;
    options.parallelism = 4;
    auto a = analyze_dataset(dataset, prompts(), first, mock_config(), nullptr, options);
    auto b = analyze_dataset(dataset, prompts(), second, mock_config(), nullptr, options);
    CHECK(a == b);
}
