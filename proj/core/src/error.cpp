#include "spliceloc/error.hpp"

namespace spliceloc {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::no_frames_found: return "NoFramesFound";
    case Errc::unsupported_format: return "UnsupportedFormat";
    case Errc::truncated_frame: return "TruncatedFrame";
    case Errc::reserved_value: return "ReservedValue";
    case Errc::bit_underflow: return "BitUnderflow";
    case Errc::invalid_codeword: return "InvalidCodeword";
    case Errc::reservoir_underflow: return "ReservoirUnderflow";
    case Errc::unusable_record: return "UnusableRecord";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::non_finite_loss: return "NonFiniteLoss";
    case Errc::empty_dataset: return "EmptyDataset";
    case Errc::source_too_short: return "SourceTooShort";
    case Errc::encoder_failure: return "EncoderFailure";
    case Errc::frame_count_mismatch: return "FrameCountMismatch";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::file_too_short: return "FileTooShort";
    case Errc::io_error: return "IoError";
    case Errc::format_error: return "FormatError";
    case Errc::invalid_argument: return "InvalidArgument";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace spliceloc
