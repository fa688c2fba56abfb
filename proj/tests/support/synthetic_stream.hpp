#pragma once

#include <cstdint>
#include <vector>

namespace spliceloc::testing {

/// Random but valid MPEG-1 Layer III stream (stereo, 128 kbps, 44.1 kHz).
/// Only granule 0 / channel 0 carries data: random side info covering every
/// block type including mixed blocks, random scalefactors, and random
/// Huffman-coded spectra over all big_values tables (with linbits escapes)
/// and both count1 tables. main_data_begin is always 0.
std::vector<std::uint8_t> synthetic_stream(std::uint32_t seed, int frames);

}  // namespace spliceloc::testing
