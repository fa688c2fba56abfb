#include "spliceloc/mp3/side_info.hpp"

#include "spliceloc/error.hpp"
#include "spliceloc/mp3/bit_reader.hpp"

namespace spliceloc::mp3 {

std::string_view to_string(BlockType type) noexcept {
    switch (type) {
    case BlockType::normal: return "normal";
    case BlockType::start: return "start";
    case BlockType::short_blocks: return "short";
    case BlockType::stop: return "stop";
    }
    return "unknown";
}

SideInfo parse_side_info(std::span<const std::uint8_t> frame, const FrameHeader& header) {
    const std::size_t begin = header.side_info_offset();
    const std::size_t length = header.side_info_bytes();
    if (frame.size() < begin + length) {
        throw Error(Errc::truncated_frame, "frame too short for side information");
    }
    BitReader bits(frame.subspan(begin, length));
    const int channels = header.channels();

    SideInfo first;
    first.main_data_begin = static_cast<int>(bits.read(9));
    bits.skip(channels == 1 ? 5 : 3);  // private bits
    bits.skip(4 * static_cast<std::size_t>(channels));  // scfsi, granule 1 only

    for (int granule = 0; granule < 2; ++granule) {
        for (int channel = 0; channel < channels; ++channel) {
            SideInfo s;
            s.main_data_begin = first.main_data_begin;
            s.part2_3_length = static_cast<int>(bits.read(12));
            s.big_values = static_cast<int>(bits.read(9));
            s.global_gain = static_cast<int>(bits.read(8));
            s.scalefac_compress = static_cast<int>(bits.read(4));
            s.window_switching_flag = bits.read_bit();
            if (s.window_switching_flag) {
                s.block_type = static_cast<BlockType>(bits.read(2));
                s.mixed_block_flag = bits.read_bit();
                s.table_select[0] = static_cast<int>(bits.read(5));
                s.table_select[1] = static_cast<int>(bits.read(5));
                for (auto& gain : s.subblock_gain) gain = static_cast<int>(bits.read(3));
                if (s.block_type == BlockType::normal) {
                    throw Error(Errc::reserved_value, "window switching with block_type 0");
                }
                s.region0_count = s.block_type == BlockType::short_blocks && !s.mixed_block_flag ? 8 : 7;
                s.region1_count = 36;
            } else {
                for (auto& table : s.table_select) table = static_cast<int>(bits.read(5));
                s.region0_count = static_cast<int>(bits.read(4));
                s.region1_count = static_cast<int>(bits.read(3));
            }
            s.preflag = bits.read_bit();
            s.scalefac_scale = bits.read_bit();
            s.count1table_select = bits.read_bit();
            if (s.big_values > 288) {
                throw Error(Errc::reserved_value, "big_values exceeds 288");
            }
            if (granule == 0 && channel == 0) first = s;
        }
    }
    return first;
}

}  // namespace spliceloc::mp3
