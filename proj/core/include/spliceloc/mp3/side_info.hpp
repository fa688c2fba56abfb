#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include "spliceloc/mp3/frame_header.hpp"

namespace spliceloc::mp3 {

enum class BlockType : int { normal = 0, start = 1, short_blocks = 2, stop = 3 };

std::string_view to_string(BlockType type) noexcept;

/// Side information of granule 0, channel 0 (plus the frame-level reservoir
/// backpointer).
struct SideInfo {
    int main_data_begin = 0;
    int part2_3_length = 0;
    int big_values = 0;
    int global_gain = 0;
    int scalefac_compress = 0;
    bool window_switching_flag = false;
    BlockType block_type = BlockType::normal;
    bool mixed_block_flag = false;
    std::array<int, 3> table_select{};
    std::array<int, 3> subblock_gain{};
    int region0_count = 0;
    /// Transmitted only for normal windows; 36 (region 2 empty) otherwise.
    int region1_count = 0;
    bool preflag = false;
    bool scalefac_scale = false;
    bool count1table_select = false;

    friend bool operator==(const SideInfo&, const SideInfo&) = default;
};

/// Parses the side-information block of `frame` (which starts at the header).
/// Every granule/channel is validated; granule 0 channel 0 is returned.
///
/// Throws TruncatedFrame when `frame` is shorter than header + side info and
/// ReservedValue for forbidden field combinations.
SideInfo parse_side_info(std::span<const std::uint8_t> frame, const FrameHeader& header);

}  // namespace spliceloc::mp3
