#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace steerkit {

// Every failure the library raises carries one of these codes. The CLI maps
// each code onto its own process exit status.
enum class ErrorCode {
    parameter,
    dimension,
    singularity,
    range,
    empty_condition,
    numeric,
    insufficient_data,
    degenerate_fit,
    data,
    empty_evaluation,
    empty_report,
    format,
    duplicate_position,
    nonpositive_depth,
    out_of_bounds,
    io,
    connection,
    remote,
    protocol,
    denoiser,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::parameter: return "parameter error";
        case ErrorCode::dimension: return "dimension error";
        case ErrorCode::singularity: return "singularity error";
        case ErrorCode::range: return "range error";
        case ErrorCode::empty_condition: return "empty-condition error";
        case ErrorCode::numeric: return "numeric error";
        case ErrorCode::insufficient_data: return "insufficient-data error";
        case ErrorCode::degenerate_fit: return "degenerate-fit error";
        case ErrorCode::data: return "data error";
        case ErrorCode::empty_evaluation: return "empty-evaluation error";
        case ErrorCode::empty_report: return "empty-report error";
        case ErrorCode::format: return "format error";
        case ErrorCode::duplicate_position: return "duplicate-position error";
        case ErrorCode::nonpositive_depth: return "nonpositive-depth error";
        case ErrorCode::out_of_bounds: return "out-of-bounds error";
        case ErrorCode::io: return "io error";
        case ErrorCode::connection: return "connection error";
        case ErrorCode::remote: return "remote error";
        case ErrorCode::protocol: return "protocol error";
        case ErrorCode::denoiser: return "denoiser error";
    }
    return "error";
}

// Exit status 2 is reserved for usage errors, so codes start at 3.
constexpr int exit_status(ErrorCode code) noexcept {
    return 3 + static_cast<int>(code);
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) fail(code, message);
}

}  // namespace steerkit
