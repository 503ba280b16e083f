#include "gestsel/error.hpp"

namespace gestsel {

std::string_view error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parse: return "ParseError";
        case ErrorKind::Validation: return "ValidationError";
        case ErrorKind::Io: return "IoError";
        case ErrorKind::EmptyCorpus: return "EmptyCorpus";
        case ErrorKind::UnknownTarget: return "UnknownTarget";
        case ErrorKind::InsufficientExamples: return "InsufficientExamples";
        case ErrorKind::InvalidPlan: return "InvalidPlan";
        case ErrorKind::MissingGestureLabel: return "MissingGestureLabel";
        case ErrorKind::EmptyDescriptor: return "EmptyDescriptor";
        case ErrorKind::Transport: return "TransportError";
        case ErrorKind::RateLimited: return "RateLimited";
        case ErrorKind::CacheMiss: return "CacheMiss";
        case ErrorKind::ProviderRefusal: return "ProviderRefusal";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::ZeroVector: return "ZeroVector";
        case ErrorKind::MissingTarget: return "MissingTarget";
        case ErrorKind::WrongLevel: return "WrongLevel";
        case ErrorKind::EmptyRun: return "EmptyRun";
        case ErrorKind::DuplicateFinalLabel: return "DuplicateFinalLabel";
        case ErrorKind::EmptyDictionary: return "EmptyDictionary";
        case ErrorKind::Config: return "ConfigError";
        case ErrorKind::ManifestCorrupt: return "ManifestCorrupt";
        case ErrorKind::PortInUse: return "PortInUse";
        case ErrorKind::Usage: return "UsageError";
    }
    return "Error";
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage: return 2;
        case ErrorKind::Parse: return 3;
        case ErrorKind::Validation: return 4;
        case ErrorKind::Io: return 5;
        case ErrorKind::Config: return 6;
        case ErrorKind::Transport: return 7;
        case ErrorKind::RateLimited: return 8;
        case ErrorKind::CacheMiss: return 9;
        case ErrorKind::ManifestCorrupt: return 10;
        case ErrorKind::PortInUse: return 11;
        case ErrorKind::UnknownTarget:
        case ErrorKind::MissingTarget: return 12;
        case ErrorKind::DuplicateFinalLabel: return 13;
        case ErrorKind::EmptyCorpus:
        case ErrorKind::EmptyRun:
        case ErrorKind::EmptyDictionary: return 14;
        default: return 1;
    }
}

}  // namespace gestsel
