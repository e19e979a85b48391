#pragma once

#include <stdexcept>
#include <string>

namespace iocdecay {

enum class ErrorCode {
    malformed_tag,
    unknown_namespace,
    invalid_parameter,
    unknown_attribute,
    negative_tau,
    clock_skew,
    insufficient_history,
    parse_error,
    validation_error,
    unknown_kind,
    load_error,
    io_error,
};

const char* to_string(ErrorCode code) noexcept;

// Single exception type for domain failures; callers switch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace iocdecay
