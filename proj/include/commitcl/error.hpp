#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace commitcl {

enum class ErrorKind {
    // input / configuration
    MissingColumn,
    UnknownLabelToken,
    DuplicateId,
    BadFractions,
    InsufficientClassSupport,
    InvalidConfig,
    TooFewClasses,
    EmptyClassPool,
    NonFiniteInput,
    DimensionMismatch,
    RaggedDimensions,
    DuplicateKey,
    MalformedLine,
    MissingEmbedding,
    IoError,
    VersionMismatch,
    CorruptCheckpoint,
    DigestMismatch,
    UnknownLabel,
    // numerical / runtime
    ZeroTarget,
    ZeroVector,
    IndexOutOfRange,
    ZeroProjection,
    ShapeMismatch,
    EmptyValidation,
    EmptyClass,
    EmptyPrototype,
    EmptyMatrix,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// True for errors caused by bad user input (files, flags, config).
bool is_input_error(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), m_kind(kind) {}

    ErrorKind kind() const noexcept { return m_kind; }

private:
    ErrorKind m_kind;
};

} // namespace commitcl
