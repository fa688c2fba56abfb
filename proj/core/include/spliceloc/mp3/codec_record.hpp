#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spliceloc/error.hpp"
#include "spliceloc/mp3/frame_header.hpp"
#include "spliceloc/mp3/scalefactors.hpp"
#include "spliceloc/mp3/side_info.hpp"

namespace spliceloc::mp3 {

struct MdctCoefficients {
    std::array<int, 576> quantized{};
    std::array<float, 576> requantized{};

    friend bool operator==(const MdctCoefficients&, const MdctCoefficients&) = default;
};

/// Every codec field of granule 0, channel 0 for one frame.
struct CodecFrameRecord {
    std::size_t frame_index = 0;
    FrameHeader header;
    SideInfo side;
    ScaleFactors scalefactors;
    MdctCoefficients mdct;

    friend bool operator==(const CodecFrameRecord&, const CodecFrameRecord&) = default;
};

/// Outcome of parsing one audio frame. `record` is empty when the frame could
/// not be decoded; `failure` then says why. Failed frames are never filled in.
struct ParsedFrame {
    FrameHeader header;
    std::optional<CodecFrameRecord> record;
    std::optional<Errc> failure;
    std::string message;

    bool usable() const noexcept { return record.has_value(); }
};

/// Parses every audio frame of an MP3 file in order, resolving the bit
/// reservoir across frames. The reservoir is reset at gaps.
std::vector<ParsedFrame> parse_stream(std::span<const std::uint8_t> file);

/// Record for one frame. Throws the frame's failure (e.g. ReservoirUnderflow)
/// or InvalidArgument when `frame_index` is out of range.
CodecFrameRecord extract_codec_record(std::span<const std::uint8_t> file, std::size_t frame_index);

/// Reads a whole file. Throws IoError.
std::vector<std::uint8_t> read_file(const std::string& path);

}  // namespace spliceloc::mp3
