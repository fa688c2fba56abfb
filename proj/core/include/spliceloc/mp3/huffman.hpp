#pragma once

#include <array>
#include <cstddef>

#include "spliceloc/mp3/bit_reader.hpp"
#include "spliceloc/mp3/side_info.hpp"

namespace spliceloc::mp3 {

/// Quantized spectrum of one granule/channel in bitstream order, with the
/// sizes of the three coding regions.
struct QuantizedSpectrum {
    std::array<int, 576> values{};
    int big_value_lines = 0;
    int count1_lines = 0;
    int zero_lines = 0;
};

/// Decodes the Huffman-coded spectrum starting at the cursor, which must sit
/// just past the scalefactors. `part2_3_end` is the absolute bit position
/// where this granule's data ends. On return the cursor is at `part2_3_end`.
///
/// Throws BitUnderflow when big_values pairs run past `part2_3_end` or the
/// buffer, InvalidCodeword when no codeword matches.
QuantizedSpectrum huffman_decode(BitReader& bits, const SideInfo& side, std::size_t part2_3_end);

}  // namespace spliceloc::mp3
