#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chartinsight {

enum class ErrorCode {
    // ingest
    SyntaxError,
    UnsupportedMark,
    MissingEncoding,
    InvalidEncoding,
    ParseError,
    TimeOrderError,
    EmptyTable,
    UnboundColumn,
    // patches / relations
    TooShort,
    UnknownDimension,
    WindowEmpty,
    TieThroughout,
    PeriodOutOfRange,
    Unresolvable,
    SingleDimension,
    // oracles
    UnknownStatistic,
    TrendAbsent,
    ClaimParseError,
    // backend
    BackendError,
    Timeout,
    AuthError,
    RateLimited,
    TemplateMissing,
    // sumdoc
    SchemaVersionMismatch,
    MalformedDocument,
    // metrics
    EmptyInput,
    EmptyDoc,
    ZeroSentences,
    // bench
    LayoutError,
    SchemaError,
    EmptyCorpus,
    // server
    ValidationError,
    NotFound,
    JobNotDone,
    // cli
    UsageError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library. `stage()` is set when the error
/// crossed a pipeline stage boundary (ingest, brainstorming, refining,
/// selfcheck) and is empty otherwise.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string stage = {})
        : std::runtime_error(compose(code, message, stage)),
          code_(code),
          detail_(message),
          stage_(std::move(stage)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }
    const std::string& stage() const noexcept { return stage_; }

    Error with_stage(std::string stage) const { return Error(code_, detail_, std::move(stage)); }

private:
    static std::string compose(ErrorCode code, const std::string& message, const std::string& stage);

    ErrorCode code_;
    std::string detail_;
    std::string stage_;
};

}  // namespace chartinsight
