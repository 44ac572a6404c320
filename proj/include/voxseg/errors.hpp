#pragma once

#include <stdexcept>
#include <string>

namespace voxseg {

// Error taxonomy shared by the whole pipeline. The CLI maps kinds onto
// exit codes (io -> 1, validation/user -> 2, leakage -> 3).
enum class ErrorKind {
    Io,
    Parse,
    UnsupportedFormat,
    Range,
    Domain,
    Geometry,
    Shape,
    PlanFormat,
    Version,
    EmptyDataset,
    InconsistentDataset,
    MissingLabel,
    DuplicateCase,
    Leakage,
    Split,
    SplitFormat,
    ResumeConflict,
    Numerics,
    Budget,
    MissingCase,
    PlanMismatch,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define VOXSEG_DEFINE_ERROR(NAME, KIND)                                                 \
    class NAME : public Error {                                                         \
    public:                                                                             \
        explicit NAME(const std::string& msg) : Error(ErrorKind::KIND, msg) {}          \
    }

VOXSEG_DEFINE_ERROR(IoError, Io);
VOXSEG_DEFINE_ERROR(ParseError, Parse);
VOXSEG_DEFINE_ERROR(UnsupportedFormat, UnsupportedFormat);
VOXSEG_DEFINE_ERROR(RangeError, Range);
VOXSEG_DEFINE_ERROR(DomainError, Domain);
VOXSEG_DEFINE_ERROR(GeometryError, Geometry);
VOXSEG_DEFINE_ERROR(ShapeError, Shape);
VOXSEG_DEFINE_ERROR(PlanFormatError, PlanFormat);
VOXSEG_DEFINE_ERROR(VersionError, Version);
VOXSEG_DEFINE_ERROR(EmptyDataset, EmptyDataset);
VOXSEG_DEFINE_ERROR(InconsistentDataset, InconsistentDataset);
VOXSEG_DEFINE_ERROR(MissingLabel, MissingLabel);
VOXSEG_DEFINE_ERROR(DuplicateCase, DuplicateCase);
VOXSEG_DEFINE_ERROR(LeakageError, Leakage);
VOXSEG_DEFINE_ERROR(SplitError, Split);
VOXSEG_DEFINE_ERROR(SplitFormatError, SplitFormat);
VOXSEG_DEFINE_ERROR(ResumeConflict, ResumeConflict);
VOXSEG_DEFINE_ERROR(NumericsError, Numerics);
VOXSEG_DEFINE_ERROR(BudgetError, Budget);
VOXSEG_DEFINE_ERROR(MissingCase, MissingCase);
VOXSEG_DEFINE_ERROR(PlanMismatch, PlanMismatch);

#undef VOXSEG_DEFINE_ERROR

}  // namespace voxseg
