#include <agarseg/error.hpp>

namespace agarseg {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::FileNotFound: return "file_not_found";
    case ErrorCode::DecodeFailure: return "decode_failure";
    case ErrorCode::UnsupportedFormat: return "unsupported_format";
    case ErrorCode::ParseError: return "parse_error";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::MissingFile: return "missing_file";
    case ErrorCode::DuplicateId: return "duplicate_id";
    case ErrorCode::OutOfBounds: return "out_of_bounds";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::EmptyInput: return "empty_input";
    case ErrorCode::NonBinaryPixel: return "non_binary_pixel";
    case ErrorCode::UnsupportedCommand: return "unsupported_command";
    case ErrorCode::MalformedNumber: return "malformed_number";
    case ErrorCode::MissingWord: return "missing_word";
    case ErrorCode::MotionBelowCutDepth: return "motion_below_cut_depth";
    case ErrorCode::WorkerTimeout: return "worker_timeout";
    case ErrorCode::WorkerFailure: return "worker_failure";
    case ErrorCode::MalformedResponse: return "malformed_response";
    case ErrorCode::MissingPrediction: return "missing_prediction";
    case ErrorCode::UnknownSession: return "unknown_session";
    case ErrorCode::IoError: return "io_error";
    }
    return "unknown";
}

} // namespace agarseg
