#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace corpus_forge {

enum class ErrorCode {
    ConfigError,
    IoError,
    EmptyCorpus,
    EmptyText,
    NoBands,
    InsufficientData,
    MissingScore,
    ZeroAvailability,
    StepOutOfRange,
    InvalidCategory,
    EmptyInstruction,
    ParseError,
    InvalidVocab,
    FormatError,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace corpus_forge
