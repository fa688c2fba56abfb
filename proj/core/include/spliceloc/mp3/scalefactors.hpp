#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "spliceloc/mp3/bit_reader.hpp"
#include "spliceloc/mp3/side_info.hpp"

namespace spliceloc::mp3 {

enum class ScalefactorLayout { long_blocks, short_blocks, mixed_blocks };

std::string_view to_string(ScalefactorLayout layout) noexcept;

/// Scalefactors of granule 0, channel 0.
///
/// long_blocks:  `long_block` has 21 entries, `short_block` is empty.
/// short_blocks: `short_block` has 12 rows of 3 windows, `long_block` empty.
/// mixed_blocks: `long_block` has bands 0..7; `short_block` has 12 rows of
///               which rows 0..2 are zero (those bands are coded as long).
struct ScaleFactors {
    ScalefactorLayout layout = ScalefactorLayout::long_blocks;
    std::vector<int> long_block;
    std::vector<std::array<int, 3>> short_block;

    friend bool operator==(const ScaleFactors&, const ScaleFactors&) = default;
};

ScalefactorLayout layout_for(const SideInfo& side) noexcept;

/// Reads the granule 0 scalefactors at the cursor. Granule 0 never reuses
/// scalefactors (scfsi applies to granule 1 only), so no cross-frame context
/// is needed. Throws BitUnderflow when the main data runs out.
ScaleFactors decode_scalefactors(BitReader& bits, const SideInfo& side);

}  // namespace spliceloc::mp3
