#include "spliceloc/mp3/record_json.hpp"

#include "json.hpp"

namespace spliceloc::mp3 {

std::string record_json_line(const ParsedFrame& frame, std::size_t frame_index) {
    using nlohmann::json;
    json j;
    j["frame_index"] = frame_index;
    j["byte_offset"] = frame.header.byte_offset;
    j["bitrate"] = frame.header.bitrate_kbps;
    j["channel_mode"] = std::string(to_string(frame.header.channel_mode));
    j["follows_gap"] = frame.header.follows_gap;
    j["usable"] = frame.usable();
    if (!frame.record) {
        j["error"] = std::string(to_string(*frame.failure));
        j["message"] = frame.message;
        return j.dump();
    }
    const auto& s = frame.record->side;
    const auto& sf = frame.record->scalefactors;
    j["main_data_begin"] = s.main_data_begin;
    j["part_23_length"] = s.part2_3_length;
    j["big_values"] = s.big_values;
    j["global_gain"] = s.global_gain;
    j["scalefac_compress"] = s.scalefac_compress;
    j["scalefac_scale"] = s.scalefac_scale ? 1 : 0;
    j["preflag"] = s.preflag ? 1 : 0;
    j["window_switching_flag"] = s.window_switching_flag ? 1 : 0;
    j["block_type"] = std::string(to_string(s.block_type));
    j["mixed_block_flag"] = s.mixed_block_flag ? 1 : 0;
    j["subblock_gain"] = s.subblock_gain;
    j["region_count"] = {s.region0_count, s.region1_count};
    j["table_select"] = s.table_select;
    j["count1_table"] = s.count1table_select ? 1 : 0;
    j["scalefactor"] = {{"layout", std::string(to_string(sf.layout))},
                        {"long", sf.long_block},
                        {"short", sf.short_block}};
    j["mdct_coef"] = frame.record->mdct.requantized;
    j["mdct_quantized"] = frame.record->mdct.quantized;
    return j.dump();
}

}  // namespace spliceloc::mp3
