#pragma once

#include <stdexcept>
#include <string>

namespace classdiag {

/// Coarse error category; doubles as the CLI exit code.
enum class ErrorCategory : int {
    config  = 2,
    data    = 3,
    numeric = 4,
};

enum class ErrorKind {
    invalid_argument,
    invalid_feature_set,
    unsupported_configuration,
    shape,
    no_procedures,
    insufficient_sample,
    infeasible_subsample,
    degenerate_model,
    oob_unavailable,
    empty_evaluation,
    schema,
    parse,
    singular_matrix,
    numerical_failure,
    undefined_kappa,
    generation_failure,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, ErrorCategory category, const std::string& what)
        : std::runtime_error(what), kind_(kind), category_(category) {}

    ErrorKind kind() const noexcept { return kind_; }
    ErrorCategory category() const noexcept { return category_; }
    int exit_code() const noexcept { return static_cast<int>(category_); }

private:
    ErrorKind kind_;
    ErrorCategory category_;
};

/// Bad arguments, malformed configuration, contract misuse. Exit code 2.
struct ConfigError : Error {
    ConfigError(ErrorKind kind, const std::string& what)
        : Error(kind, ErrorCategory::config, what) {}
};

/// Problems with the data itself: schema, parsing, infeasible sampling. Exit code 3.
struct DataError : Error {
    DataError(ErrorKind kind, const std::string& what)
        : Error(kind, ErrorCategory::data, what) {}
};

/// Numerical breakdowns: singular systems, diverging objectives. Exit code 4.
struct NumericError : Error {
    NumericError(ErrorKind kind, const std::string& what)
        : Error(kind, ErrorCategory::numeric, what) {}
};

} // namespace classdiag
