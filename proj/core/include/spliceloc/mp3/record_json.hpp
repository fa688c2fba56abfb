#pragma once

#include <cstddef>
#include <string>

#include "spliceloc/mp3/codec_record.hpp"

namespace spliceloc::mp3 {

/// One JSON object (no trailing newline) with `frame_index` and every codec
/// field of the frame. Unusable frames carry `"usable": false` and the error
/// name instead of fabricated fields.
std::string record_json_line(const ParsedFrame& frame, std::size_t frame_index);

}  // namespace spliceloc::mp3
