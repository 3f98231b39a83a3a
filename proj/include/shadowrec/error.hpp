#pragma once

#include <stdexcept>
#include <string>

namespace shadowrec {

enum class ErrorKind {
    Index,
    Parse,
    Validation,
    Domain,
    Solver,
    Config,
    InsufficientData,
    EmptyResult,
    EstimatorMismatch,
    Dimension,
    Integrity,
    Statistics,
    Lookup,
    Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base class for every error raised by the library. The kind is what the
/// CLI maps onto exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define SHADOWREC_DEFINE_ERROR(Name, Kind)                                   \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& message) : Error(Kind, message) {}  \
    };

SHADOWREC_DEFINE_ERROR(IndexError, ErrorKind::Index)
SHADOWREC_DEFINE_ERROR(ParseError, ErrorKind::Parse)
SHADOWREC_DEFINE_ERROR(ValidationError, ErrorKind::Validation)
SHADOWREC_DEFINE_ERROR(DomainError, ErrorKind::Domain)
SHADOWREC_DEFINE_ERROR(SolverError, ErrorKind::Solver)
SHADOWREC_DEFINE_ERROR(ConfigError, ErrorKind::Config)
SHADOWREC_DEFINE_ERROR(InsufficientDataError, ErrorKind::InsufficientData)
SHADOWREC_DEFINE_ERROR(EmptyResultError, ErrorKind::EmptyResult)
SHADOWREC_DEFINE_ERROR(EstimatorMismatchError, ErrorKind::EstimatorMismatch)
SHADOWREC_DEFINE_ERROR(DimensionError, ErrorKind::Dimension)
SHADOWREC_DEFINE_ERROR(IntegrityError, ErrorKind::Integrity)
SHADOWREC_DEFINE_ERROR(StatisticsError, ErrorKind::Statistics)
SHADOWREC_DEFINE_ERROR(LookupError, ErrorKind::Lookup)
SHADOWREC_DEFINE_ERROR(IoError, ErrorKind::Io)

#undef SHADOWREC_DEFINE_ERROR

}  // namespace shadowrec
