#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geoverify {

enum class ErrorKind {
    // grid / cube
    InvalidGrid,
    ZeroWeightSum,
    UnknownVariable,
    MisalignedRange,
    EmptyRegion,
    ShapeMismatch,
    // io
    BadMagic,
    UnsupportedVersion,
    TruncatedPayload,
    NonFiniteValue,
    ParseError,
    NonMonotonicTime,
    IrregularCadence,
    IoError,
    // climatology
    SpecMismatch,
    EmptyInput,
    MissingKey,
    InvalidTime,
    // metrics
    MissingCube,
    ZeroAnomalyVariance,
    EmptySeries,
    PerfectMatch,
    NonPositivePeak,
    ZeroBaseline,
    // regrid
    OutOfExtent,
    // tc
    MissingChannel,
    SeedOutsideGrid,
    NoOverlap,
    InvalidFlags,
    // vqa
    EmptySet,
    EmptyGroundTruth,
    WrongQuestionType,
    // cli
    Config,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidGrid: return "InvalidGrid";
    case ErrorKind::ZeroWeightSum: return "ZeroWeightSum";
    case ErrorKind::UnknownVariable: return "UnknownVariable";
    case ErrorKind::MisalignedRange: return "MisalignedRange";
    case ErrorKind::EmptyRegion: return "EmptyRegion";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorKind::TruncatedPayload: return "TruncatedPayload";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorKind::IrregularCadence: return "IrregularCadence";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::SpecMismatch: return "SpecMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::MissingKey: return "MissingKey";
    case ErrorKind::InvalidTime: return "InvalidTime";
    case ErrorKind::MissingCube: return "MissingCube";
    case ErrorKind::ZeroAnomalyVariance: return "ZeroAnomalyVariance";
    case ErrorKind::EmptySeries: return "EmptySeries";
    case ErrorKind::PerfectMatch: return "PerfectMatch";
    case ErrorKind::NonPositivePeak: return "NonPositivePeak";
    case ErrorKind::ZeroBaseline: return "ZeroBaseline";
    case ErrorKind::OutOfExtent: return "OutOfExtent";
    case ErrorKind::MissingChannel: return "MissingChannel";
    case ErrorKind::SeedOutsideGrid: return "SeedOutsideGrid";
    case ErrorKind::NoOverlap: return "NoOverlap";
    case ErrorKind::InvalidFlags: return "InvalidFlags";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::EmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorKind::WrongQuestionType: return "WrongQuestionType";
    case ErrorKind::Config: return "Config";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (and the
/// CLI exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// ParseError that remembers the 1-based data row it came from (0 if unknown).
class ParseError : public Error {
public:
    ParseError(std::size_t row, const std::string& what)
        : Error(ErrorKind::ParseError, "row " + std::to_string(row) + ": " + what), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

}  // namespace geoverify
