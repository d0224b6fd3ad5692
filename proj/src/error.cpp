#include "commitcl/error.hpp"

namespace commitcl {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::UnknownLabelToken: return "UnknownLabelToken";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::BadFractions: return "BadFractions";
    case ErrorKind::InsufficientClassSupport: return "InsufficientClassSupport";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::TooFewClasses: return "TooFewClasses";
    case ErrorKind::EmptyClassPool: return "EmptyClassPool";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::RaggedDimensions: return "RaggedDimensions";
    case ErrorKind::DuplicateKey: return "DuplicateKey";
    case ErrorKind::MalformedLine: return "MalformedLine";
    case ErrorKind::MissingEmbedding: return "MissingEmbedding";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::DigestMismatch: return "DigestMismatch";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::ZeroTarget: return "ZeroTarget";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::ZeroProjection: return "ZeroProjection";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::EmptyValidation: return "EmptyValidation";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::EmptyPrototype: return "EmptyPrototype";
    case ErrorKind::EmptyMatrix: return "EmptyMatrix";
    }
    return "Unknown";
}

bool is_input_error(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::MissingColumn:
    case ErrorKind::UnknownLabelToken:
    case ErrorKind::DuplicateId:
    case ErrorKind::BadFractions:
    case ErrorKind::InsufficientClassSupport:
    case ErrorKind::InvalidConfig:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::RaggedDimensions:
    case ErrorKind::DuplicateKey:
    case ErrorKind::MalformedLine:
    case ErrorKind::MissingEmbedding:
    case ErrorKind::IoError:
    case ErrorKind::VersionMismatch:
    case ErrorKind::CorruptCheckpoint:
    case ErrorKind::DigestMismatch:
    case ErrorKind::UnknownLabel:
    case ErrorKind::NonFiniteInput:
        return true;
    default:
        return false;
    }
}

} // namespace commitcl
