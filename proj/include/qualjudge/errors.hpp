#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qualjudge {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Unusable configuration or command-line input.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input files (datasets, explanations, gold annotations, scripts).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Provider-side failures surfaced by the gateway.
class GatewayError : public Error {
public:
    enum class Kind {
        Auth,
        ExhaustedRetries,
        MalformedResponse,
        ScriptedGap,
        ContextOverflow,
        Transport,
    };

    GatewayError(Kind kind, const std::string& what, int last_status = 0)
        : Error(what), kind_(kind), last_status_(last_status) {}

    Kind kind() const { return kind_; }
    int last_status() const { return last_status_; }

private:
    Kind kind_;
    int last_status_;
};

/// Structural invariant violations: id-set mismatches, broken reports,
/// direct-summary responses that do not reconcile.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what, std::vector<std::string> violations = {})
        : Error(violations.empty() ? what : what + ": " + join_violations(violations)),
          violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const { return violations_; }

private:
    static std::string join_violations(const std::vector<std::string>& violations) {
        std::string out;
        for (std::size_t i = 0; i < violations.size(); ++i) {
            if (i > 0) out += "; ";
            out += violations[i];
        }
        return out;
    }

    std::vector<std::string> violations_;
};

}  // namespace qualjudge
