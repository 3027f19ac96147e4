#pragma once

#include <stdexcept>
#include <string>

namespace hyperconf {

enum class ErrorKind {
    OutsideCone,
    OrderTooHigh,
    JetMismatch,
    SingularComposition,
    DegenerateSample,
    NonLorentzian,
    UnknownIdentity,
    StructureConditionFailed,
    SupportLeak,
    SupportViolation,
    QuadratureFail,
    InsufficientHistory,
    InequalityViolation,
    FormNotRadial,
    ParseError,
    NotFound,
    Degenerate,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::OutsideCone: return "OutsideCone";
        case ErrorKind::OrderTooHigh: return "OrderTooHigh";
        case ErrorKind::JetMismatch: return "JetMismatch";
        case ErrorKind::SingularComposition: return "SingularComposition";
        case ErrorKind::DegenerateSample: return "DegenerateSample";
        case ErrorKind::NonLorentzian: return "NonLorentzian";
        case ErrorKind::UnknownIdentity: return "UnknownIdentity";
        case ErrorKind::StructureConditionFailed: return "StructureConditionFailed";
        case ErrorKind::SupportLeak: return "SupportLeak";
        case ErrorKind::SupportViolation: return "SupportViolation";
        case ErrorKind::QuadratureFail: return "QuadratureFail";
        case ErrorKind::InsufficientHistory: return "InsufficientHistory";
        case ErrorKind::InequalityViolation: return "InequalityViolation";
        case ErrorKind::FormNotRadial: return "FormNotRadial";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::NotFound: return "NotFound";
        case ErrorKind::Degenerate: return "Degenerate";
    }
    return "Unknown";
}

/// Single exception type; the kind tells callers what went wrong.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace hyperconf
