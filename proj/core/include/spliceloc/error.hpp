#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spliceloc {

enum class Errc {
    no_frames_found,
    unsupported_format,
    truncated_frame,
    reserved_value,
    bit_underflow,
    invalid_codeword,
    reservoir_underflow,
    unusable_record,
    shape_mismatch,
    non_finite_loss,
    empty_dataset,
    source_too_short,
    encoder_failure,
    frame_count_mismatch,
    length_mismatch,
    file_too_short,
    io_error,
    format_error,
    invalid_argument,
};

std::string_view to_string(Errc code) noexcept;

/// Domain error carrying a machine-readable code. Everything the library
/// throws on bad input is an Error; anything else is a bug.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace spliceloc
