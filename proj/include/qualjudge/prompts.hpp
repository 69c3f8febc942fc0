#pragma once

#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qualjudge/corpus.hpp"
#include "qualjudge/errors.hpp"
#include "qualjudge/explanations.hpp"
#include "qualjudge/report.hpp"
#include "qualjudge/util.hpp"

namespace qualjudge {

enum class PromptName {
    PerInstanceAnalysis,
    DirectSummary,
    CumulativeDecision,
    CumulativeNewType,
    EvaluatorEquivalence,
    SyntheticReformulation,
};

inline const char* prompt_file_name(PromptName name) {
    switch (name) {
        case PromptName::PerInstanceAnalysis: return "per_instance_analysis.txt";
        case PromptName::DirectSummary: return "direct_summary.txt";
        case PromptName::CumulativeDecision: return "cumulative_decision.txt";
        case PromptName::CumulativeNewType: return "cumulative_new_type.txt";
        case PromptName::EvaluatorEquivalence: return "evaluator_equivalence.txt";
        case PromptName::SyntheticReformulation: return "synthetic_reformulation.txt";
    }
    return "";
}

/// Substitute {{name}} placeholders. A line consisting solely of a
/// placeholder listed in `collapsible` is dropped entirely when its binding
/// is empty; that is how optional blocks (retrieved documents) vanish from
/// a rendering. Unbound placeholders and leftover markers are errors: a
/// rendered prompt never contains the {{ }} sigil.
inline std::string render_template(const std::string& body,
                                   const std::map<std::string, std::string>& bindings,
                                   const std::set<std::string>& collapsible = {}) {
    std::ostringstream out;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        std::size_t eol = body.find('\n', pos);
        std::string line = eol == std::string::npos ? body.substr(pos)
                                                    : body.substr(pos, eol - pos);
        bool drop_line = false;
        {
            std::string trimmed = trim(line);
            if (trimmed.size() > 4 && trimmed.rfind("{{", 0) == 0 &&
                trimmed.find("}}") == trimmed.size() - 2 &&
                trimmed.find("{{", 2) == std::string::npos) {
                std::string name = trimmed.substr(2, trimmed.size() - 4);
                auto it = bindings.find(name);
                if (it == bindings.end())
                    throw ConfigError("unbound placeholder {{" + name + "}}");
                if (it->second.empty() && collapsible.count(name)) drop_line = true;
            }
        }
        if (!drop_line) {
            std::string rendered;
            std::size_t i = 0;
            while (i < line.size()) {
                std::size_t open = line.find("{{", i);
                if (open == std::string::npos) {
                    rendered.append(line, i, line.size() - i);
                    break;
                }
                std::size_t close = line.find("}}", open + 2);
                if (close == std::string::npos)
                    throw ConfigError("unterminated placeholder in template line: " + line);
                rendered.append(line, i, open - i);
                std::string name = line.substr(open + 2, close - open - 2);
                auto it = bindings.find(name);
                if (it == bindings.end())
                    throw ConfigError("unbound placeholder {{" + name + "}}");
                rendered += it->second;
                i = close + 2;
            }
            out << rendered;
            if (eol != std::string::npos) out << '\n';
        }
        if (eol == std::string::npos) break;
        pos = eol + 1;
    }
    return out.str();
}

/// Loads the template assets from a directory. Leading '#' lines of each
/// asset are header comments, stripped before rendering.
class PromptLibrary {
public:
    static PromptLibrary load(const std::filesystem::path& dir) {
        PromptLibrary lib;
        lib.dir_ = dir;
        for (PromptName name :
             {PromptName::PerInstanceAnalysis, PromptName::DirectSummary,
              PromptName::CumulativeDecision, PromptName::CumulativeNewType,
              PromptName::EvaluatorEquivalence, PromptName::SyntheticReformulation}) {
            auto path = dir / prompt_file_name(name);
            lib.bodies_[name] = strip_header(read_text_file(path));
        }
        return lib;
    }

    /// Resolution order: QUALJUDGE_PROMPT_DIR env var, then the compiled-in
    /// asset directory.
    static PromptLibrary load_default() {
        if (const char* env = std::getenv("QUALJUDGE_PROMPT_DIR")) {
            if (*env != '\0') return load(env);
        }
#ifdef QUALJUDGE_DEFAULT_PROMPT_DIR
        return load(QUALJUDGE_DEFAULT_PROMPT_DIR);
#else
        throw ConfigError("no prompt directory configured; set QUALJUDGE_PROMPT_DIR");
#endif
    }

    const std::string& body(PromptName name) const { return bodies_.at(name); }
    const std::filesystem::path& dir() const { return dir_; }

private:
    static std::string strip_header(const std::string& raw) {
        std::size_t pos = 0;
        while (pos < raw.size() && raw[pos] == '#') {
            std::size_t eol = raw.find('\n', pos);
            if (eol == std::string::npos) return "";
            pos = eol + 1;
        }
        return raw.substr(pos);
    }

    std::filesystem::path dir_;
    std::map<PromptName, std::string> bodies_;
};

inline std::string serialize_documents_block(const std::vector<std::string>& docs) {
    if (docs.empty()) return "";
    std::string block = "Retrieved documents:\n***\n";
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (i > 0) block += "\n";
        block += "Document " + std::to_string(i + 1) + ":\n" + docs[i] + "\n";
    }
    block += "***\n";
    return block;
}

/// Pool serialization used by the decision and new-type prompts: one entry
/// per line, keyed type_0..type_{m-1}, newlines collapsed so each entry
/// stays on one logical line. Counts are bookkeeping and are not shown.
inline std::string serialize_pool(const Report& pool) {
    std::string out;
    for (std::size_t i = 0; i < pool.issue_types.size(); ++i) {
        const auto& type = pool.issue_types[i];
        if (i > 0) out += "\n";
        out += type.key + ": " + trim(collapse_newlines(type.label)) + ": " +
               trim(collapse_newlines(type.description));
    }
    return out;
}

inline std::string render_analysis_prompt(const PromptLibrary& lib, const Instance& instance) {
    std::string label;
    for (std::size_t i = 0; i < instance.ground_truths.size(); ++i) {
        if (i > 0) label += "\n---\n";
        label += instance.ground_truths[i];
    }
    return render_template(lib.body(PromptName::PerInstanceAnalysis),
                           {{"metric_info", instance.task_comment},
                            {"question", instance.user_input},
                            {"documents", serialize_documents_block(
                                              instance.retrieved_docs.value_or(
                                                  std::vector<std::string>{}))},
                            {"label", label},
                            {"answer", instance.generated_response}},
                           {"documents"});
}

inline std::string render_decision_prompt(const PromptLibrary& lib, const Report& pool,
                                          const IssueExplanation& explanation) {
    if (pool.issue_types.empty())
        throw std::invalid_argument(
            "render_decision_prompt: pool must be non-empty (the first instance always "
            "creates a new type)");
    return render_template(lib.body(PromptName::CumulativeDecision),
                           {{"error_cases", serialize_pool(pool)},
                            {"analysis", explanation.summary}});
}

inline std::string render_new_type_prompt(const PromptLibrary& lib, const Report& pool,
                                          const IssueExplanation& explanation) {
    return render_template(lib.body(PromptName::CumulativeNewType),
                           {{"error_cases", serialize_pool(pool)},
                            {"analysis", explanation.summary}});
}

inline std::string render_direct_summary_prompt(const PromptLibrary& lib,
                                                const std::vector<IssueExplanation>& explanations) {
    if (explanations.empty())
        throw std::invalid_argument("render_direct_summary_prompt: explanations must be non-empty");
    std::string joined;
    for (std::size_t i = 0; i < explanations.size(); ++i) {
        if (i > 0) joined += "\n";
        joined += "Example " + explanations[i].instance_id + ": " +
                  trim(collapse_newlines(explanations[i].summary));
    }
    return render_template(lib.body(PromptName::DirectSummary), {{"analysis", joined}});
}

inline std::string render_equivalence_prompt(const PromptLibrary& lib,
                                             const std::string& expert_1,
                                             const std::string& expert_2) {
    if (trim(expert_1).empty() || trim(expert_2).empty())
        throw std::invalid_argument("render_equivalence_prompt: both conclusions must be non-empty");
    return render_template(lib.body(PromptName::EvaluatorEquivalence),
                           {{"expert_1", trim(collapse_newlines(expert_1))},
                            {"expert_2", trim(collapse_newlines(expert_2))}});
}

inline std::string render_reformulation_prompt(const PromptLibrary& lib,
                                               const std::string& issue_description) {
    if (trim(issue_description).empty())
        throw std::invalid_argument("render_reformulation_prompt: description must be non-empty");
    return render_template(lib.body(PromptName::SyntheticReformulation),
                           {{"issue", issue_description}});
}

}  // namespace qualjudge
