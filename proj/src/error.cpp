#include "iocdecay/error.hpp"

namespace iocdecay {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::malformed_tag: return "MalformedTag";
        case ErrorCode::unknown_namespace: return "UnknownNamespace";
        case ErrorCode::invalid_parameter: return "InvalidParameter";
        case ErrorCode::unknown_attribute: return "UnknownAttribute";
        case ErrorCode::negative_tau: return "NegativeTau";
        case ErrorCode::clock_skew: return "ClockSkew";
        case ErrorCode::insufficient_history: return "InsufficientHistory";
        case ErrorCode::parse_error: return "ParseError";
        case ErrorCode::validation_error: return "ValidationError";
        case ErrorCode::unknown_kind: return "UnknownKind";
        case ErrorCode::load_error: return "LoadError";
        case ErrorCode::io_error: return "IoError";
    }
    return "Error";
}

}  // namespace iocdecay
