#include <doctest.h>

#include <vector>

#include "qualjudge/prompts.hpp"
#include "helpers.hpp"

using namespace qualjudge;
using testutil::make_explanation;
using testutil::make_instance;
using testutil::prompts;

namespace {

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t count = 0;
    for (std::size_t pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + needle.size()))
        ++count;
    return count;
}

Report two_type_pool() {
    Report pool;
    pool.issue_types.push_back({"type_0", "Premature truncation",
                                "The generation stops before the answer is complete.", 3,
                                {"1", "2", "3"}});
    pool.issue_types.push_back({"type_1", "Wrong entity",
                                "The response names a different entity than required.", 1, {"4"}});
    return pool;
}

std::string golden(const std::string& name) {
    return read_text_file(testutil::fixture("golden") / name);
}

}  // namespace

TEST_CASE("analysis prompt binds the instance fields") {
    Instance instance = make_instance("q1", "Who wrote Dune?", "Frank Herbert", "Isaac Asimov");
    instance.task_comment = "The task metric is binary Match.";
    std::string rendered = render_analysis_prompt(prompts(), instance);
    // the instruction mentions the separator exactly once
    CHECK(count_occurrences(rendered, "Summary:") == 1);
    CHECK(rendered.find("Who wrote Dune?") != std::string::npos);
    CHECK(rendered.find("Frank Herbert") != std::string::npos);
    CHECK(rendered.find("Isaac Asimov") != std::string::npos);
    CHECK(rendered.find("The task metric is binary Match.") != std::string::npos);
    CHECK(rendered.find("Retrieved documents") == std::string::npos);
    CHECK(rendered.find("{{") == std::string::npos);
}

TEST_CASE("analysis prompt enumerates retrieved documents") {
    Instance instance = make_instance("q2");
    instance.retrieved_docs = std::vector<std::string>{"doc a", "doc b", "doc c", "doc d", "doc e"};
    std::string rendered = render_analysis_prompt(prompts(), instance);
    for (int i = 1; i <= 5; ++i)
        CHECK(rendered.find("Document " + std::to_string(i) + ":") != std::string::npos);
    CHECK(count_occurrences(rendered, "Document ") == 5);
    CHECK(rendered.find("Retrieved documents:") != std::string::npos);
}

TEST_CASE("analysis prompt accepts an empty generated response") {
    Instance instance = make_instance("q3", "input", "truth", "");
    std::string rendered = render_analysis_prompt(prompts(), instance);
    CHECK(rendered.find("LLM-generated answer:\n***\n\n***") != std::string::npos);
}

TEST_CASE("multiple ground truths are joined with a visible separator") {
    Instance instance = make_instance("q4");
    instance.ground_truths = {"first answer", "second answer"};
    std::string rendered = render_analysis_prompt(prompts(), instance);
    CHECK(rendered.find("first answer\n---\nsecond answer") != std::string::npos);
}

TEST_CASE("golden: analysis prompt for the minimal instance") {
    Instance instance = make_instance("q1", "Who wrote Dune?", "Frank Herbert", "Isaac Asimov");
    instance.task_comment = "binary Match";
    CHECK(render_analysis_prompt(prompts(), instance) == golden("analysis_minimal.txt"));
}

TEST_CASE("decision prompt lists the pool keyed type_0..type_{m-1}") {
    Report pool = two_type_pool();
    std::string rendered =
        render_decision_prompt(prompts(), pool, make_explanation("9", "Something new."));
    CHECK(rendered.find("type_0: Premature truncation:") != std::string::npos);
    CHECK(rendered.find("type_1: Wrong entity:") != std::string::npos);
    CHECK(rendered.find("Something new.") != std::string::npos);
    CHECK(rendered.find("Decision: type_0") != std::string::npos);  // instruction example
    CHECK(rendered.find("Decision: None") != std::string::npos);
    CHECK(rendered.find("{{") == std::string::npos);
}

TEST_CASE("decision prompt keys are contiguous for any pool size") {
    for (std::size_t size : {1u, 3u, 7u}) {
        Report pool;
        for (std::size_t i = 0; i < size; ++i)
            pool.issue_types.push_back({type_key(i), "L" + std::to_string(i),
                                        "D" + std::to_string(i), 1, {std::to_string(i)}});
        std::string rendered =
            render_decision_prompt(prompts(), pool, make_explanation("x", "s"));
        for (std::size_t i = 0; i < size; ++i)
            CHECK(rendered.find("type_" + std::to_string(i) + ": L" + std::to_string(i)) !=
                  std::string::npos);
        CHECK(rendered.find("type_" + std::to_string(size) + ":") == std::string::npos);
    }
}

TEST_CASE("decision prompt requires a non-empty pool") {
    Report empty;
    CHECK_THROWS_AS(render_decision_prompt(prompts(), empty, make_explanation("x", "s")),
                    std::invalid_argument);
}

TEST_CASE("pool entries with newlines stay on one logical line") {
    Report pool;
    pool.issue_types.push_back(
        {"type_0", "Label\nwith newline", "Description\ncontinues here.", 1, {"1"}});
    std::string serialized = serialize_pool(pool);
    CHECK(serialized.find('\n') == std::string::npos);
    CHECK(serialized == "type_0: Label with newline: Description continues here.");
}

TEST_CASE("golden: decision prompt with a two-type pool") {
    std::string rendered = render_decision_prompt(
        prompts(), two_type_pool(),
        make_explanation("7", "The answer is cut off before the final step."));
    CHECK(rendered == golden("decision_two_types.txt"));
}

TEST_CASE("new-type prompt renders for empty and long pools") {
    Report empty;
    std::string rendered =
        render_new_type_prompt(prompts(), empty, make_explanation("1", "First issue."));
    CHECK(rendered.find("{SHORT LABEL}: {DESCRIPTION}") != std::string::npos);
    CHECK(rendered.find("First issue.") != std::string::npos);
    CHECK(rendered.find("{{") == std::string::npos);

    Report pool;
    for (std::size_t i = 0; i < 12; ++i)
        pool.issue_types.push_back({type_key(i), "Label " + std::to_string(i),
                                    "Description " + std::to_string(i) + ".", 1,
                                    {std::to_string(i)}});
    std::string long_pool =
        render_new_type_prompt(prompts(), pool, make_explanation("13", "Yet another."));
    CHECK(long_pool.find("type_11: Label 11") != std::string::npos);
}

TEST_CASE("golden: new-type prompt with a two-type pool") {
    std::string rendered = render_new_type_prompt(
        prompts(), two_type_pool(),
        make_explanation("7", "The answer invents a citation that does not exist."));
    CHECK(rendered == golden("new_type_two_types.txt"));
}

TEST_CASE("direct summary prompt preserves id order") {
    std::vector<IssueExplanation> explanations;
    for (int i = 1; i <= 50; ++i)
        explanations.push_back(
            make_explanation(std::to_string(i), "issue " + std::to_string(i)));
    std::string rendered = render_direct_summary_prompt(prompts(), explanations);
    std::size_t previous = 0;
    for (int i = 1; i <= 50; ++i) {
        std::size_t at = rendered.find("Example " + std::to_string(i) + ": issue");
        REQUIRE(at != std::string::npos);
        CHECK(at > previous);
        previous = at;
    }
    CHECK(rendered.find("\"summary\"") != std::string::npos);
    CHECK(rendered.find("error_name") != std::string::npos);
    CHECK(rendered.find("num_examples") != std::string::npos);
}

TEST_CASE("direct summary prompt handles a single explanation") {
    std::string rendered = render_direct_summary_prompt(
        prompts(), {make_explanation("only", "The one issue.")});
    CHECK(rendered.find("Example only: The one issue.") != std::string::npos);
}

TEST_CASE("golden: direct summary prompt with two explanations") {
    std::string rendered = render_direct_summary_prompt(
        prompts(), {make_explanation("1", "The answer is truncated."),
                    make_explanation("2", "The parse drops a topping.")});
    CHECK(rendered == golden("direct_summary_two.txt"));
}

TEST_CASE("equivalence prompt binds both experts in order") {
    std::string rendered =
        render_equivalence_prompt(prompts(), "truncated output", "wrong entity");
    CHECK(rendered.find("Expert 1 conclusion: truncated output") != std::string::npos);
    CHECK(rendered.find("Expert 2 conclusion: wrong entity") != std::string::npos);
    std::string swapped =
        render_equivalence_prompt(prompts(), "wrong entity", "truncated output");
    CHECK(swapped != rendered);
    CHECK(swapped.find("Output only one word 'Yes' or 'No'.") != std::string::npos);
    std::string identical = render_equivalence_prompt(prompts(), "same text", "same text");
    CHECK(identical.find("Expert 1 conclusion: same text") != std::string::npos);
    CHECK(identical.find("Expert 2 conclusion: same text") != std::string::npos);
}

TEST_CASE("golden: equivalence prompt") {
    std::string rendered = render_equivalence_prompt(
        prompts(), "The generation was stopped too early.",
        "The generated response provides an incomplete overview.");
    CHECK(rendered == golden("equivalence_basic.txt"));
}

TEST_CASE("reformulation prompt instructs one paraphrase of the same issue") {
    std::string rendered = render_reformulation_prompt(
        prompts(), "The generation stops before the answer is complete.");
    CHECK(rendered.find("The generation stops before the answer is complete.") !=
          std::string::npos);
    CHECK(rendered.find("Rewrite this issue description in different words") !=
          std::string::npos);
    CHECK(rendered.find("Output only the rewritten issue description") != std::string::npos);

    std::string quoted = render_reformulation_prompt(prompts(), "Description with \"quotes\".");
    CHECK(quoted.find("Description with \"quotes\".") != std::string::npos);
}

TEST_CASE("rendering leaves no placeholder sigil in any template") {
    Instance instance = make_instance("q", "in", "gt", "out");
    instance.retrieved_docs = std::vector<std::string>{"d1"};
    Report pool = two_type_pool();
    IssueExplanation explanation = make_explanation("e", "summary text");
    std::vector<std::string> renders = {
        render_analysis_prompt(prompts(), instance),
        render_decision_prompt(prompts(), pool, explanation),
        render_new_type_prompt(prompts(), pool, explanation),
        render_direct_summary_prompt(prompts(), {explanation}),
        render_equivalence_prompt(prompts(), "a", "b"),
        render_reformulation_prompt(prompts(), "desc"),
    };
    for (const auto& text : renders) {
        CHECK(text.find("{{") == std::string::npos);
        CHECK(text.find("}}") == std::string::npos);
    }
}

TEST_CASE("render_template rejects unbound placeholders") {
    CHECK_THROWS_AS(render_template("hello {{name}}", {}), ConfigError);
    CHECK(render_template("hello {{name}}", {{"name", "world"}}) == "hello world");
    // collapsible placeholder-only line with empty binding disappears
    CHECK(render_template("a\n{{gap}}\nb", {{"gap", ""}}, {"gap"}) == "a\nb");
    CHECK(render_template("a\n{{gap}}\nb", {{"gap", "X"}}, {"gap"}) == "a\nX\nb");
    // non-collapsible placeholders keep their (empty) line
    CHECK(render_template("a\n{{gap}}\nb", {{"gap", ""}}) == "a\n\nb");
}

TEST_CASE("prompt directory resolves from the environment variable") {
    ::setenv("QUALJUDGE_PROMPT_DIR", QUALJUDGE_PROMPT_DIR, 1);
    PromptLibrary lib = PromptLibrary::load_default();
    CHECK(lib.body(PromptName::PerInstanceAnalysis).rfind("You are an expert", 0) == 0);
    ::unsetenv("QUALJUDGE_PROMPT_DIR");
    // header comments are stripped from every asset
    for (PromptName name : {PromptName::PerInstanceAnalysis, PromptName::DirectSummary,
                            PromptName::CumulativeDecision, PromptName::CumulativeNewType,
                            PromptName::EvaluatorEquivalence,
                            PromptName::SyntheticReformulation}) {
        CHECK(testutil::prompts().body(name).rfind("#", 0) != 0);
    }
}

TEST_CASE("loading from a missing prompt directory fails cleanly") {
    CHECK_THROWS_AS(PromptLibrary::load("/nonexistent/prompt/dir"), ParseError);
}

TEST_CASE("rendering is a pure function of its inputs") {
    Instance instance = make_instance("q", "in", "gt", "out");
    CHECK(render_analysis_prompt(prompts(), instance) ==
          render_analysis_prompt(prompts(), instance));
}
