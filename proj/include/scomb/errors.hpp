#pragma once

#include <stdexcept>
#include <string>

namespace scomb {

// Error categories used across the library. The C API maps these 1:1 onto
// status codes, so keep the list in sync with simplex_combine.h.
enum class Errc {
    invalid_argument,
    dimension_mismatch,
    non_positive_entry,
    not_zero_sum,
    insufficient_rows,
    zero_variation,
    invalid_k,
    zero_msfe,
    zero_mean,
    io_error,
    schema_error,
    parse_error,
    empty_panel,
    missing_run,
    config_error,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace scomb
