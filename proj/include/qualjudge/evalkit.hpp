#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qualjudge/cache.hpp"
#include "qualjudge/chat.hpp"
#include "qualjudge/errors.hpp"
#include "qualjudge/explanations.hpp"
#include "qualjudge/prompts.hpp"
#include "qualjudge/report.hpp"
#include "qualjudge/util.hpp"

namespace qualjudge {

/// Cluster-label assignment for a set of instance ids. Cluster ordering is
/// first appearance, so report-derived partitions keep creation order.
class Partition {
public:
    void set(const std::string& id, const std::string& label) {
        auto [it, inserted] = labels_.emplace(id, label);
        if (!inserted) it->second = label;
        if (label_index_.emplace(label, label_order_.size()).second)
            label_order_.push_back(label);
    }

    static Partition from_report(const Report& report) {
        Partition partition;
        for (const auto& type : report.issue_types) {
            for (const auto& id : type.members) partition.set(id, type.key);
        }
        return partition;
    }

    const std::map<std::string, std::string>& labels() const { return labels_; }
    const std::vector<std::string>& label_order() const { return label_order_; }
    std::size_t size() const { return labels_.size(); }
    bool empty() const { return labels_.empty(); }

    /// Equal as set partitions: the same family of id-groups, labels aside.
    bool same_grouping(const Partition& other) const {
        return canonical_groups() == other.canonical_groups();
    }

private:
    std::set<std::vector<std::string>> canonical_groups() const {
        std::map<std::string, std::vector<std::string>> by_label;
        for (const auto& [id, label] : labels_) by_label[label].push_back(id);
        std::set<std::vector<std::string>> groups;
        for (auto& [label, ids] : by_label) groups.insert(ids);  // ids sorted via std::map
        return groups;
    }

    std::map<std::string, std::string> labels_;
    std::map<std::string, std::size_t> label_index_;
    std::vector<std::string> label_order_;
};

struct ContingencyMatrix {
    std::vector<std::string> row_labels;  // partition A clusters, first-appearance order
    std::vector<std::string> col_labels;  // partition B clusters
    std::vector<std::vector<long long>> counts;
    std::vector<long long> row_sums;
    std::vector<long long> col_sums;
    long long total = 0;
};

/// Co-occurrence counts n_ij over a shared id set. Mismatched id sets are
/// an error naming the symmetric difference.
inline ContingencyMatrix contingency(const Partition& a, const Partition& b) {
    if (a.empty() || b.empty()) throw ValidationError("contingency: empty partition");
    std::vector<std::string> only_a, only_b;
    for (const auto& [id, label] : a.labels())
        if (!b.labels().count(id)) only_a.push_back(id);
    for (const auto& [id, label] : b.labels())
        if (!a.labels().count(id)) only_b.push_back(id);
    if (!only_a.empty() || !only_b.empty()) {
        std::vector<std::string> violations;
        auto describe = [&](const char* side, const std::vector<std::string>& ids) {
            if (ids.empty()) return;
            std::string msg = std::string("ids only in ") + side + ": ";
            for (std::size_t i = 0; i < ids.size() && i < 20; ++i) {
                if (i > 0) msg += ", ";
                msg += ids[i];
            }
            violations.push_back(msg);
        };
        describe("first partition", only_a);
        describe("second partition", only_b);
        throw ValidationError("partition id sets differ", violations);
    }

    ContingencyMatrix m;
    m.row_labels = a.label_order();
    m.col_labels = b.label_order();
    std::map<std::string, std::size_t> row_index, col_index;
    for (std::size_t i = 0; i < m.row_labels.size(); ++i) row_index[m.row_labels[i]] = i;
    for (std::size_t j = 0; j < m.col_labels.size(); ++j) col_index[m.col_labels[j]] = j;
    m.counts.assign(m.row_labels.size(), std::vector<long long>(m.col_labels.size(), 0));
    m.row_sums.assign(m.row_labels.size(), 0);
    m.col_sums.assign(m.col_labels.size(), 0);
    for (const auto& [id, label_a] : a.labels()) {
        std::size_t i = row_index[label_a];
        std::size_t j = col_index[b.labels().at(id)];
        ++m.counts[i][j];
        ++m.row_sums[i];
        ++m.col_sums[j];
        ++m.total;
    }
    return m;
}

/// ARI via pair counting on the contingency table, computed in exact
/// integer arithmetic:
///   ARI = 2(T*Index - P*Q) / (T*(P+Q) - 2*P*Q)
/// with Index = sum C(n_ij,2), P = sum C(a_i,2), Q = sum C(b_j,2),
/// T = C(n,2). A vanishing denominator (both partitions all singletons or
/// both a single cluster) yields 1 for identical groupings and 0 otherwise,
/// mirroring the standard reference implementation.
inline double adjusted_rand_index(const Partition& a, const Partition& b) {
    ContingencyMatrix m = contingency(a, b);
    if (m.total < 2) throw ValidationError("adjusted_rand_index: need at least 2 instances");
    using Big = __int128;
    auto comb2 = [](long long x) -> Big {
        return x < 2 ? Big{0} : Big(x) * Big(x - 1) / 2;
    };
    Big index = 0;
    for (const auto& row : m.counts)
        for (long long cell : row) index += comb2(cell);
    Big sum_rows = 0, sum_cols = 0;
    for (long long s : m.row_sums) sum_rows += comb2(s);
    for (long long s : m.col_sums) sum_cols += comb2(s);
    Big pairs_total = comb2(m.total);
    Big numerator = 2 * (pairs_total * index - sum_rows * sum_cols);
    Big denominator = pairs_total * (sum_rows + sum_cols) - 2 * sum_rows * sum_cols;
    if (denominator == 0) return a.same_grouping(b) ? 1.0 : 0.0;
    return static_cast<double>(static_cast<long double>(numerator) /
                               static_cast<long double>(denominator));
}

namespace detail {

/// O(n^3) Hungarian algorithm; minimizes over a square cost matrix and
/// returns the column assigned to each row.
inline std::vector<std::size_t> min_cost_assignment(
    const std::vector<std::vector<long long>>& cost) {
    const std::size_t n = cost.size();
    const long long kInf = std::numeric_limits<long long>::max() / 4;
    std::vector<long long> u(n + 1, 0), v(n + 1, 0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<long long> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            std::size_t i0 = match[j0], j1 = 0;
            long long delta = kInf;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                long long cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n, 0);
    for (std::size_t j = 1; j <= n; ++j)
        if (match[j] >= 1) row_to_col[match[j] - 1] = j - 1;
    return row_to_col;
}

/// Maximum assignment value over the given rows x cols of the weight
/// matrix, zero-padded to a square.
inline long long max_assignment_value(const std::vector<std::vector<long long>>& weights,
                                      const std::vector<std::size_t>& rows,
                                      const std::vector<std::size_t>& cols) {
    if (rows.empty() || cols.empty()) return 0;
    std::size_t n = std::max(rows.size(), cols.size());
    std::vector<std::vector<long long>> cost(n, std::vector<long long>(n, 0));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            cost[i][j] = -weights[rows[i]][cols[j]];
    auto assignment = min_cost_assignment(cost);
    long long value = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::size_t j = assignment[i];
        if (j < cols.size()) value += weights[rows[i]][cols[j]];
    }
    return value;
}

}  // namespace detail

struct ClusterMapping {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (row, col) indexes
    long long objective = 0;
};

/// Maximum-overlap matching between the two partitions' clusters. The
/// matching always has size min(rows, cols); among equal-objective
/// matchings the lexicographically smallest pair list wins (pairs compared
/// by creation index). Deterministic, exact.
inline ClusterMapping optimal_mapping(const ContingencyMatrix& m) {
    const std::size_t rows = m.row_labels.size();
    const std::size_t cols = m.col_labels.size();
    std::vector<std::size_t> all_rows(rows), all_cols(cols);
    std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
    std::iota(all_cols.begin(), all_cols.end(), std::size_t{0});

    ClusterMapping mapping;
    mapping.objective = detail::max_assignment_value(m.counts, all_rows, all_cols);

    // Fix pairs in lexicographic order, keeping the optimum reachable. A row
    // is left unmatched only when no column choice preserves the optimum
    // (possible only with more rows than columns).
    long long fixed_sum = 0;
    std::vector<char> col_used(cols, 0);
    for (std::size_t row = 0; row < rows; ++row) {
        std::vector<std::size_t> rest_rows;
        for (std::size_t r = row + 1; r < rows; ++r) rest_rows.push_back(r);
        for (std::size_t col = 0; col < cols; ++col) {
            if (col_used[col]) continue;
            std::vector<std::size_t> rest_cols;
            for (std::size_t c = 0; c < cols; ++c)
                if (!col_used[c] && c != col) rest_cols.push_back(c);
            long long candidate = fixed_sum + m.counts[row][col] +
                                  detail::max_assignment_value(m.counts, rest_rows, rest_cols);
            if (candidate == mapping.objective) {
                mapping.pairs.emplace_back(row, col);
                col_used[col] = 1;
                fixed_sum += m.counts[row][col];
                break;
            }
        }
    }
    return mapping;
}

struct ConfusionReport {
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<std::vector<long long>> matrix;
    std::size_t mapped = 0;  // leading diagonal prefix length
    std::string text;
};

/// Rows and columns reordered so mapped pairs form the diagonal prefix;
/// unmapped clusters are appended in creation order.
inline ConfusionReport confusion_report(const ContingencyMatrix& m, const ClusterMapping& mapping,
                                        const std::vector<std::string>* row_names = nullptr,
                                        const std::vector<std::string>* col_names = nullptr) {
    const auto& rnames = row_names ? *row_names : m.row_labels;
    const auto& cnames = col_names ? *col_names : m.col_labels;

    std::vector<std::size_t> row_order, col_order;
    std::vector<char> row_used(m.row_labels.size(), 0), col_used(m.col_labels.size(), 0);
    for (const auto& [r, c] : mapping.pairs) {
        row_order.push_back(r);
        col_order.push_back(c);
        row_used[r] = 1;
        col_used[c] = 1;
    }
    for (std::size_t r = 0; r < m.row_labels.size(); ++r)
        if (!row_used[r]) row_order.push_back(r);
    for (std::size_t c = 0; c < m.col_labels.size(); ++c)
        if (!col_used[c]) col_order.push_back(c);

    ConfusionReport report;
    report.mapped = mapping.pairs.size();
    for (std::size_t r : row_order) report.row_labels.push_back(rnames[r]);
    for (std::size_t c : col_order) report.col_labels.push_back(cnames[c]);
    for (std::size_t r : row_order) {
        std::vector<long long> line;
        for (std::size_t c : col_order) line.push_back(m.counts[r][c]);
        report.matrix.push_back(std::move(line));
    }

    std::size_t label_width = 4;
    for (const auto& label : report.row_labels)
        label_width = std::max(label_width, std::min<std::size_t>(label.size(), 28));
    std::ostringstream out;
    auto clip = [](const std::string& s) {
        return s.size() <= 28 ? s : s.substr(0, 25) + "...";
    };
    out << std::string(label_width, ' ');
    for (const auto& col : report.col_labels) {
        std::string c = clip(col);
        out << " | " << c;
    }
    out << "\n";
    for (std::size_t i = 0; i < report.row_labels.size(); ++i) {
        std::string r = clip(report.row_labels[i]);
        out << r << std::string(label_width - r.size(), ' ');
        for (std::size_t j = 0; j < report.col_labels.size(); ++j) {
            std::string cell = std::to_string(report.matrix[i][j]);
            std::size_t w = clip(report.col_labels[j]).size();
            out << " | " << cell
                << std::string(w > cell.size() ? w - cell.size() : 0, ' ');
        }
        out << "\n";
    }
    report.text = out.str();
    return report;
}

/// Yes/No equivalence verdicts from an evaluator model. Non-Yes/No output
/// is retried once with a corrective line; a second failure counts as No
/// with a warning.
class EquivalenceJudge {
public:
    EquivalenceJudge(const PromptLibrary& lib, Provider& provider, ProviderConfig config,
                     ResponseCache* cache)
        : lib_(lib), provider_(provider), config_(std::move(config)), cache_(cache) {}

    bool same_failure(const std::string& expert_1, const std::string& expert_2) {
        std::string prompt = render_equivalence_prompt(lib_, expert_1, expert_2);
        if (auto verdict = ask(prompt)) return *verdict;
        if (auto verdict = ask(prompt + "\n\nAnswer with exactly one word: Yes or No."))
            return *verdict;
        warnings_.push_back("evaluator output was not Yes/No twice; counted as No");
        return false;
    }

    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    std::optional<bool> ask(const std::string& prompt) {
        ChatRequest request = make_user_request(config_, prompt);
        ChatResponse response = cached_complete(provider_, request, cache_);
        std::string text = to_lower(trim(response.content));
        while (!text.empty() && !std::isalpha(static_cast<unsigned char>(text.front())))
            text.erase(text.begin());
        auto word_is = [&](std::string_view word) {
            return text.rfind(word, 0) == 0 &&
                   (text.size() == word.size() ||
                    !std::isalpha(static_cast<unsigned char>(text[word.size()])));
        };
        if (word_is("yes")) return true;
        if (word_is("no")) return false;
        return std::nullopt;
    }

    const PromptLibrary& lib_;
    Provider& provider_;
    ProviderConfig config_;
    ResponseCache* cache_;
    std::vector<std::string> warnings_;
};

inline std::string label_with_description(const IssueType& type) {
    if (type.description.empty() || type.description == type.label) return type.label;
    return type.label + ": " + type.description;
}

/// Fraction of reference clusters whose mapped counterpart the evaluator
/// judges semantically equivalent. Unmapped reference clusters count as
/// misses: the denominator is the reference cluster count.
inline double semantic_label_consistency(const Report& reference, const Report& hypothesis,
                                         const ClusterMapping& mapping, EquivalenceJudge& judge) {
    if (reference.issue_types.empty())
        throw ValidationError("semantic_label_consistency: empty reference report");
    long yes = 0;
    for (const auto& [i, j] : mapping.pairs) {
        if (judge.same_failure(label_with_description(reference.issue_types.at(i)),
                               label_with_description(hypothesis.issue_types.at(j))))
            ++yes;
    }
    return static_cast<double>(yes) / static_cast<double>(reference.issue_types.size());
}

struct GoldAnnotation {
    std::string instance_id;
    std::string gold_explanation;
    std::string gold_cluster_label;
    std::string gold_cluster_name;
};

/// Per-instance analysis accuracy: one equivalence verdict per gold
/// annotation, gold explanation as expert 1 and the predicted summary as
/// expert 2.
inline double per_instance_accuracy(const std::vector<IssueExplanation>& predictions,
                                    const std::vector<GoldAnnotation>& gold,
                                    EquivalenceJudge& judge) {
    if (gold.empty()) throw ValidationError("per_instance_accuracy: empty gold set");
    std::map<std::string, const IssueExplanation*> by_id;
    for (const auto& prediction : predictions) by_id[prediction.instance_id] = &prediction;
    std::vector<std::string> missing;
    for (const auto& annotation : gold)
        if (!by_id.count(annotation.instance_id)) missing.push_back(annotation.instance_id);
    if (!missing.empty())
        throw ValidationError("gold ids missing from predictions", missing);
    long yes = 0;
    for (const auto& annotation : gold) {
        if (judge.same_failure(annotation.gold_explanation,
                               by_id[annotation.instance_id]->summary))
            ++yes;
    }
    return static_cast<double>(yes) / static_cast<double>(gold.size());
}

struct MetaItem {
    std::string explanation_a;
    std::string explanation_b;
    bool human_verdict = false;
};

/// Agreement rate between the evaluator model and human equivalence
/// verdicts over a meta-evaluation set.
inline double meta_evaluate(const std::vector<MetaItem>& items, EquivalenceJudge& judge) {
    if (items.empty()) throw ValidationError("meta_evaluate: empty meta set");
    long agree = 0;
    for (const auto& item : items) {
        if (judge.same_failure(item.explanation_a, item.explanation_b) == item.human_verdict)
            ++agree;
    }
    return static_cast<double>(agree) / static_cast<double>(items.size());
}

struct SyntheticIssueType {
    std::string name;
    std::string description;
    int frequency = 0;
};

struct SyntheticSpec {
    long seed = 0;
    std::vector<SyntheticIssueType> issue_types;
};

struct SyntheticSet {
    std::vector<IssueExplanation> explanations;
    Partition gold;
};

/// Reformulate each issue description frequency-many times, emit the
/// resulting explanations in seed-shuffled order together with the hidden
/// gold partition (cluster sizes equal the requested frequencies exactly).
inline SyntheticSet generate_synthetic(const SyntheticSpec& spec, const PromptLibrary& lib,
                                       Provider& provider, const ProviderConfig& config,
                                       ResponseCache* cache) {
    if (spec.issue_types.empty()) throw ConfigError("synthetic spec: no issue types");
    long long total = 0;
    std::set<std::string> names;
    for (std::size_t k = 0; k < spec.issue_types.size(); ++k) {
        const auto& type = spec.issue_types[k];
        if (type.frequency < 1)
            throw ConfigError("synthetic spec: frequency must be >= 1 for issue type " +
                              std::to_string(k));
        if (trim(type.description).empty())
            throw ConfigError("synthetic spec: empty description for issue type " +
                              std::to_string(k));
        if (!type.name.empty() && !names.insert(type.name).second)
            throw ConfigError("synthetic spec: duplicate issue type name '" + type.name + "'");
        total += type.frequency;
    }

    int width = 1;
    for (long long v = total; v >= 10; v /= 10) ++width;

    SyntheticSet out;
    std::size_t serial = 0;
    for (std::size_t k = 0; k < spec.issue_types.size(); ++k) {
        const auto& type = spec.issue_types[k];
        std::string gold_label = type.name.empty() ? "e" + std::to_string(k) : type.name;
        for (int i = 0; i < type.frequency; ++i) {
            ChatRequest request = make_user_request(
                config, render_reformulation_prompt(lib, type.description));
            ChatResponse response = cached_complete(provider, request, cache);
            std::string number = std::to_string(serial);
            IssueExplanation explanation;
            explanation.instance_id =
                "syn_" + std::string(width > static_cast<int>(number.size())
                                         ? width - number.size()
                                         : 0, '0') + number;
            explanation.full_analysis = response.content;
            explanation.summary = trim(response.content);
            explanation.model = config.model;
            out.gold.set(explanation.instance_id, gold_label);
            out.explanations.push_back(std::move(explanation));
            ++serial;
        }
    }

    auto order = shuffled_indices(out.explanations.size(),
                                  static_cast<std::uint64_t>(spec.seed));
    std::vector<IssueExplanation> shuffled;
    shuffled.reserve(out.explanations.size());
    for (std::size_t index : order) shuffled.push_back(std::move(out.explanations[index]));
    out.explanations = std::move(shuffled);
    return out;
}

}  // namespace qualjudge
