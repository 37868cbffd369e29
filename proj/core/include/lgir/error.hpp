#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lgir {

enum class ErrorCode {
    MissingReference,
    UnexpectedReference,
    EmptyText,
    TemplateError,
    EmptyDecomposition,
    BackendUnavailable,
    Timeout,
    MalformedResponse,
    DimensionMismatch,
    ParseError,
    AmbiguousAnswer,
    CorruptIndex,
    MissingSubset,
    SessionNotFound,
    ConfigError,
    IngestInProgress,
    InvalidArgument,
    NotFound,
};

std::string_view to_string(ErrorCode code);
std::optional<ErrorCode> error_code_from_string(std::string_view name);

// Stage label attached to pipeline failures ("stage1", "stage2", ...).
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string stage = {})
        : std::runtime_error(message), code_(code), stage_(std::move(stage)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& stage() const noexcept { return stage_; }

    // Transport failures that the gateway may retry.
    bool transient() const noexcept {
        return code_ == ErrorCode::BackendUnavailable || code_ == ErrorCode::Timeout;
    }

private:
    ErrorCode code_;
    std::string stage_;
};

}  // namespace lgir
