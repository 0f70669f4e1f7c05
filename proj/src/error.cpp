#include "corpus_forge/error.hpp"

namespace corpus_forge {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::ConfigError: return "CONFIG_ERROR";
        case ErrorCode::IoError: return "IO_ERROR";
        case ErrorCode::EmptyCorpus: return "EMPTY_CORPUS";
        case ErrorCode::EmptyText: return "EMPTY_TEXT";
        case ErrorCode::NoBands: return "NO_BANDS";
        case ErrorCode::InsufficientData: return "INSUFFICIENT_DATA";
        case ErrorCode::MissingScore: return "MISSING_SCORE";
        case ErrorCode::ZeroAvailability: return "ZERO_AVAILABILITY";
        case ErrorCode::StepOutOfRange: return "STEP_OUT_OF_RANGE";
        case ErrorCode::InvalidCategory: return "INVALID_CATEGORY";
        case ErrorCode::EmptyInstruction: return "EMPTY_INSTRUCTION";
        case ErrorCode::ParseError: return "PARSE_ERROR";
        case ErrorCode::InvalidVocab: return "INVALID_VOCAB";
        case ErrorCode::FormatError: return "FORMAT_ERROR";
    }
    return "UNKNOWN";
}

}  // namespace corpus_forge
