// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace birkhoff {

/// Every failure the library reports carries one of these kinds so callers
/// (and the CLI exit-code mapping) can branch without parsing messages.
enum class ErrorKind {
    EmptyScore,
    NoSonorities,
    NoChords,
    ScoreTooShort,
    SegmentTooShort,
    EmptyHistogram,
    InvalidArgument,
    // ingest
    MalformedHeader,
    MalformedTrack,
    UnsupportedFormat,
    DanglingNoteOn,
    ZeroDivision,
    SchemaError,
    RangeError,
    OrderError,
    // model / training
    EmptyTrainingSet,
    SingleClassTraining,
    NonFiniteLoss,
    DenominatorUnderflow,
    ModelFormat,
    // evaluation
    SingleClassEval,
    IoError,
};

constexpr std::string_view to_string(ErrorKind k) noexcept {
    switch (k) {
    case ErrorKind::EmptyScore: return "EmptyScore";
    case ErrorKind::NoSonorities: return "NoSonorities";
    case ErrorKind::NoChords: return "NoChords";
    case ErrorKind::ScoreTooShort: return "ScoreTooShort";
    case ErrorKind::SegmentTooShort: return "SegmentTooShort";
    case ErrorKind::EmptyHistogram: return "EmptyHistogram";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::MalformedTrack: return "MalformedTrack";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::DanglingNoteOn: return "DanglingNoteOn";
    case ErrorKind::ZeroDivision: return "ZeroDivision";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::RangeError: return "RangeError";
    case ErrorKind::OrderError: return "OrderError";
    case ErrorKind::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorKind::SingleClassTraining: return "SingleClassTraining";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::DenominatorUnderflow: return "DenominatorUnderflow";
    case ErrorKind::ModelFormat: return "ModelFormat";
    case ErrorKind::SingleClassEval: return "SingleClassEval";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised by dataset readers; `line()` is 1-based.
class LineError : public Error {
public:
    LineError(ErrorKind kind, std::size_t line, const std::string& what)
        : Error(kind, "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace birkhoff
