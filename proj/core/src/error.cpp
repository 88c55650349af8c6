#include "chartinsight/error.hpp"

namespace chartinsight {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::SyntaxError: return "SyntaxError";
        case ErrorCode::UnsupportedMark: return "UnsupportedMark";
        case ErrorCode::MissingEncoding: return "MissingEncoding";
        case ErrorCode::InvalidEncoding: return "InvalidEncoding";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::TimeOrderError: return "TimeOrderError";
        case ErrorCode::EmptyTable: return "EmptyTable";
        case ErrorCode::UnboundColumn: return "UnboundColumn";
        case ErrorCode::TooShort: return "TooShort";
        case ErrorCode::UnknownDimension: return "UnknownDimension";
        case ErrorCode::WindowEmpty: return "WindowEmpty";
        case ErrorCode::TieThroughout: return "TieThroughout";
        case ErrorCode::PeriodOutOfRange: return "PeriodOutOfRange";
        case ErrorCode::Unresolvable: return "Unresolvable";
        case ErrorCode::SingleDimension: return "SingleDimension";
        case ErrorCode::UnknownStatistic: return "UnknownStatistic";
        case ErrorCode::TrendAbsent: return "TrendAbsent";
        case ErrorCode::ClaimParseError: return "ClaimParseError";
        case ErrorCode::BackendError: return "BackendError";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::AuthError: return "AuthError";
        case ErrorCode::RateLimited: return "RateLimited";
        case ErrorCode::TemplateMissing: return "TemplateMissing";
        case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
        case ErrorCode::MalformedDocument: return "MalformedDocument";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::EmptyDoc: return "EmptyDoc";
        case ErrorCode::ZeroSentences: return "ZeroSentences";
        case ErrorCode::LayoutError: return "LayoutError";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::JobNotDone: return "JobNotDone";
        case ErrorCode::UsageError: return "UsageError";
    }
    return "Unknown";
}

std::string Error::compose(ErrorCode code, const std::string& message, const std::string& stage) {
    std::string out;
    if (!stage.empty()) out += "[" + stage + "] ";
    out += std::string(to_string(code));
    if (!message.empty()) out += ": " + message;
    return out;
}

}  // namespace chartinsight
