#pragma once

// Independent oracles used by the unit and acceptance suites. These stay
// deliberately naive so they cannot share a bug with the implementations
// they check.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qualjudge/evalkit.hpp"

namespace testutil {

/// ARI by classifying every id pair as together/apart in each partition and
/// computing index, expected index, and max index from those pair counts.
inline double ari_pair_counting_oracle(const qualjudge::Partition& a,
                                       const qualjudge::Partition& b) {
    std::vector<std::string> ids;
    for (const auto& [id, label] : a.labels()) ids.push_back(id);
    long double together_both = 0, together_a_only = 0, together_b_only = 0, apart_both = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            bool same_a = a.labels().at(ids[i]) == a.labels().at(ids[j]);
            bool same_b = b.labels().at(ids[i]) == b.labels().at(ids[j]);
            if (same_a && same_b) ++together_both;
            else if (same_a) ++together_a_only;
            else if (same_b) ++together_b_only;
            else ++apart_both;
        }
    }
    long double total = together_both + together_a_only + together_b_only + apart_both;
    long double index = together_both;
    long double sum_a = together_both + together_a_only;   // sum_i C(a_i, 2)
    long double sum_b = together_both + together_b_only;   // sum_j C(b_j, 2)
    long double expected = sum_a * sum_b / total;
    long double max_index = (sum_a + sum_b) / 2.0L;
    if (max_index == expected) {
        // both all-singletons or both single-cluster
        return (together_a_only == 0 && together_b_only == 0) ? 1.0 : 0.0;
    }
    return static_cast<double>((index - expected) / (max_index - expected));
}

inline qualjudge::Partition random_partition(std::mt19937& rng, int n, int clusters) {
    qualjudge::Partition partition;
    std::uniform_int_distribution<int> pick(0, clusters - 1);
    for (int i = 0; i < n; ++i)
        partition.set("id" + std::to_string(i), "c" + std::to_string(pick(rng)));
    return partition;
}

struct OracleMatching {
    long long objective = 0;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

/// Exhaustive search over all matchings of size min(rows, cols); among
/// optimal ones keeps the lexicographically smallest pair list.
inline OracleMatching exhaustive_best_matching(const std::vector<std::vector<long long>>& w) {
    std::size_t rows = w.size();
    std::size_t cols = rows == 0 ? 0 : w[0].size();
    OracleMatching best;
    best.objective = -1;
    std::vector<std::pair<std::size_t, std::size_t>> current;
    std::vector<char> col_used(cols, 0);
    std::size_t target = std::min(rows, cols);

    auto consider = [&]() {
        long long value = 0;
        for (const auto& [r, c] : current) value += w[r][c];
        if (value > best.objective ||
            (value == best.objective && current < best.pairs)) {
            best.objective = value;
            best.pairs = current;
        }
    };

    // choose which rows participate (when rows > cols) and their columns
    std::function<void(std::size_t)> recurse = [&](std::size_t row) {
        if (current.size() == target) {
            consider();
            return;
        }
        if (row == rows) return;
        std::size_t rows_left = rows - row;
        std::size_t needed = target - current.size();
        if (rows_left < needed) return;
        if (rows_left > needed) recurse(row + 1);  // skip this row
        for (std::size_t c = 0; c < cols; ++c) {
            if (col_used[c]) continue;
            col_used[c] = 1;
            current.emplace_back(row, c);
            recurse(row + 1);
            current.pop_back();
            col_used[c] = 0;
        }
    };
    recurse(0);
    return best;
}

}  // namespace testutil
