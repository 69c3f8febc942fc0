#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <unistd.h>

#include "qualjudge/errors.hpp"

namespace qualjudge {

inline bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

inline std::string trim(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && is_space(text[begin])) ++begin;
    while (end > begin && is_space(text[end - 1])) --end;
    return std::string(text.substr(begin, end - begin));
}

inline std::string to_lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

/// Lowercase, collapse whitespace runs to single spaces, trim the ends.
inline std::string normalize_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (is_space(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    return out;
}

/// Position of the last case-insensitive occurrence of `token` in `text`,
/// or npos.
inline std::size_t rfind_icase(std::string_view text, std::string_view token) {
    if (token.empty() || token.size() > text.size()) return std::string::npos;
    for (std::size_t start = text.size() - token.size() + 1; start-- > 0;) {
        bool hit = true;
        for (std::size_t i = 0; i < token.size(); ++i) {
            if (std::tolower(static_cast<unsigned char>(text[start + i])) !=
                std::tolower(static_cast<unsigned char>(token[i]))) {
                hit = false;
                break;
            }
        }
        if (hit) return start;
    }
    return std::string::npos;
}

inline bool contains(std::string_view text, std::string_view needle) {
    return text.find(needle) != std::string_view::npos;
}

inline std::string collapse_newlines(std::string_view text) {
    std::string out(text);
    std::replace(out.begin(), out.end(), '\n', ' ');
    std::replace(out.begin(), out.end(), '\r', ' ');
    return out;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Write-temp-then-rename so concurrent readers never observe a torn file.
inline void write_text_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    auto tmp = path;
    tmp += ".tmp" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write file: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("short write: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

/// Portable Fisher-Yates permutation of 0..n-1. std::shuffle draws an
/// implementation-defined sequence, so the permutation is produced by hand
/// to keep report files reproducible across standard libraries.
inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

/// Apply `fn` to indices 0..count-1 on up to `parallelism` threads.
/// Results land in input order. The first exception aborts remaining work
/// and is rethrown after all workers join.
template <typename T>
std::vector<T> parallel_map(std::size_t count, int parallelism,
                            const std::function<T(std::size_t)>& fn) {
    std::vector<T> results(count);
    if (count == 0) return results;
    int workers = std::max(1, parallelism);
    if (static_cast<std::size_t>(workers) > count) workers = static_cast<int>(count);

    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) results[i] = fn(i);
        return results;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        while (!stop.load(std::memory_order_relaxed)) {
            std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            try {
                results[i] = fn(i);
            } catch (...) {
                {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
                stop.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
};

inline MeanStd aggregate_scores(const std::vector<double>& values) {
    if (values.empty()) throw Error("aggregate_scores: empty input");
    MeanStd out;
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) /
               static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(values.size()));
    return out;
}

inline std::string format_fixed(double value, int decimals) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(decimals);
    out << value;
    return out.str();
}

/// "0.730 ± 0.024" presentation used for seed-averaged metrics.
inline std::string format_mean_std(const MeanStd& agg) {
    return format_fixed(agg.mean, 3) + " ± " + format_fixed(agg.stddev, 3);
}

}  // namespace qualjudge
