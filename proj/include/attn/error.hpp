#pragma once

#include <stdexcept>
#include <string>

namespace attn {

enum class ErrorCode {
    invalid_argument,
    shape_mismatch,
    index_out_of_range,
    zero_norm,
    numerical_failure,
    io_failure,
    format_error,
    manifest_parse,
    shape_inconsistency,
    label_range,
    unsupported_format,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::shape_mismatch: return "shape_mismatch";
    case ErrorCode::index_out_of_range: return "index_out_of_range";
    case ErrorCode::zero_norm: return "zero_norm";
    case ErrorCode::numerical_failure: return "numerical_failure";
    case ErrorCode::io_failure: return "io_failure";
    case ErrorCode::format_error: return "format_error";
    case ErrorCode::manifest_parse: return "manifest_parse";
    case ErrorCode::shape_inconsistency: return "shape_inconsistency";
    case ErrorCode::label_range: return "label_range";
    case ErrorCode::unsupported_format: return "unsupported_format";
    }
    return "unknown";
}

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) throw Error(code, what);
}

} // namespace attn
