#include "lgir/error.hpp"

#include <array>
#include <utility>

namespace lgir {
namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 18> kNames{{
    {ErrorCode::MissingReference, "MissingReference"},
    {ErrorCode::UnexpectedReference, "UnexpectedReference"},
    {ErrorCode::EmptyText, "EmptyText"},
    {ErrorCode::TemplateError, "TemplateError"},
    {ErrorCode::EmptyDecomposition, "EmptyDecomposition"},
    {ErrorCode::BackendUnavailable, "BackendUnavailable"},
    {ErrorCode::Timeout, "Timeout"},
    {ErrorCode::MalformedResponse, "MalformedResponse"},
    {ErrorCode::DimensionMismatch, "DimensionMismatch"},
    {ErrorCode::ParseError, "ParseError"},
    {ErrorCode::AmbiguousAnswer, "AmbiguousAnswer"},
    {ErrorCode::CorruptIndex, "CorruptIndex"},
    {ErrorCode::MissingSubset, "MissingSubset"},
    {ErrorCode::SessionNotFound, "SessionNotFound"},
    {ErrorCode::ConfigError, "ConfigError"},
    {ErrorCode::IngestInProgress, "IngestInProgress"},
    {ErrorCode::InvalidArgument, "InvalidArgument"},
    {ErrorCode::NotFound, "NotFound"},
}};

}  // namespace

std::string_view to_string(ErrorCode code) {
    for (const auto& [c, name] : kNames) {
        if (c == code) return name;
    }
    return "Unknown";
}

std::optional<ErrorCode> error_code_from_string(std::string_view name) {
    for (const auto& [c, n] : kNames) {
        if (n == name) return c;
    }
    return std::nullopt;
}

}  // namespace lgir
