#include "parser_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "reference_decoder.h"
#include "spliceloc/mp3/codec_record.hpp"

namespace spliceloc::testing {

namespace {

using mp3::BlockType;
using mp3::ScalefactorLayout;

// Reference scalefactors are stored as one flat band list: 22 long slots,
// 13x3 short slots, or 8 long + 10x3 short slots (from band 3) for mixed.
std::vector<int> reference_scalefactors(const ref_frame_t& r, ScalefactorLayout layout) {
    std::vector<int> out;
    if (layout == ScalefactorLayout::long_blocks) {
        for (int i = 0; i < 21; ++i) out.push_back(r.iscf[i]);
    } else if (layout == ScalefactorLayout::short_blocks) {
        for (int i = 0; i < 36; ++i) out.push_back(r.iscf[i]);
    } else {
        for (int i = 0; i < 8; ++i) out.push_back(r.iscf[i]);
        for (int i = 0; i < 27; ++i) out.push_back(r.iscf[8 + i]);
    }
    return out;
}

std::vector<int> flatten(const mp3::ScaleFactors& sf) {
    std::vector<int> out(sf.long_block.begin(), sf.long_block.end());
    const std::size_t first = sf.layout == ScalefactorLayout::mixed_blocks ? 3 : 0;
    for (std::size_t b = first; b < sf.short_block.size(); ++b)
        for (int w : sf.short_block[b]) out.push_back(w);
    return out;
}

}  // namespace

void compare_with_reference(std::span<const std::uint8_t> file, const std::string& name, OracleTally& tally,
                            double rel_tol) {
    ++tally.files;
    const auto mine = mp3::parse_stream(file);

    std::vector<ref_frame_t> ref(file.size() / 96 + 16);
    ref.resize(ref_decode_stream(file.data(), file.size(), ref.data(), ref.size()));

    std::map<std::size_t, const ref_frame_t*> by_offset;
    for (const auto& r : ref) by_offset[r.byte_offset] = &r;

    auto fail = [&](std::size_t idx, const std::string& what) {
        ++tally.field_mismatches[what];
        if (tally.first_failures.size() < 20) {
            std::ostringstream os;
            os << name << " frame " << idx << ": " << what;
            tally.first_failures.push_back(os.str());
        }
    };

    for (const auto& pf : mine) {
        auto it = by_offset.find(pf.header.byte_offset);
        const bool ref_ok = it != by_offset.end() && it->second->decoded;
        if (!pf.usable() || !ref_ok) {
            if (pf.usable() != ref_ok) {
                ++tally.frames_unpaired;
                fail(pf.record ? pf.record->frame_index : 0, pf.usable() ? "reference did not decode" : "library did not decode");
            }
            continue;
        }
        const auto& r = *it->second;
        const auto& rec = *pf.record;
        const auto& s = rec.side;
        const std::size_t idx = rec.frame_index;
        std::size_t errs = 0;
        auto check = [&](bool ok, const char* field) {
            if (!ok) {
                ++errs;
                fail(idx, field);
            }
        };

        ++tally.frames_compared;
        ++tally.frames_by_block_type[std::string(mp3::to_string(s.block_type)) + (s.mixed_block_flag ? "+mixed" : "")];

        check(rec.header.bitrate_kbps == r.bitrate_kbps, "bitrate");
        check(rec.header.channels() == r.channels, "channels");
        check(s.main_data_begin == r.main_data_begin, "main_data_begin");
        check(s.part2_3_length == r.part_23_length, "part_23_length");
        check(s.big_values == r.big_values, "big_values");
        check(s.global_gain == r.global_gain, "global_gain");
        check(s.scalefac_compress == r.scalefac_compress, "scalefac_compress");
        check(static_cast<int>(s.block_type) == r.block_type, "block_type");
        check(int{s.mixed_block_flag} == r.mixed_block_flag, "mixed_block_flag");
        check(int{s.preflag} == r.preflag, "preflag");
        check(int{s.scalefac_scale} == r.scalefac_scale, "scalefac_scale");
        check(int{s.count1table_select} == r.count1_table, "count1_table");
        for (int i = 0; i < 3; ++i) check(s.table_select[static_cast<std::size_t>(i)] == r.table_select[i], "table_select");
        check(s.region0_count == r.region_count[0], "region0_count");
        if (s.window_switching_flag) {
            // region1 is implicit here; the reference stores a sentinel
            for (int i = 0; i < 3; ++i)
                check(s.subblock_gain[static_cast<std::size_t>(i)] == r.subblock_gain[i], "subblock_gain");
        } else {
            check(s.region1_count == r.region_count[1], "region1_count");
        }

        check(flatten(rec.scalefactors) == reference_scalefactors(r, rec.scalefactors.layout), "scalefactor");

        bool q_ok = true;
        for (std::size_t i = 0; i < 576; ++i) q_ok = q_ok && rec.mdct.quantized[i] == r.quant[i];
        check(q_ok, "mdct_quantized");

        // The reference folds a 2^-0.5 into mid/side frames and halves its output.
        const double undo = 2.0 * (r.ms_stereo ? std::sqrt(2.0) : 1.0);
        bool c_ok = true;
        for (std::size_t i = 0; i < 576; ++i) {
            const double a = rec.mdct.requantized[i];
            const double b = static_cast<double>(r.deq[i]) * undo;
            const double scale = std::max(std::abs(a), std::abs(b));
            if (scale == 0.0) continue;
            const double rel = std::abs(a - b) / scale;
            tally.worst_relative_error = std::max(tally.worst_relative_error, rel);
            c_ok = c_ok && rel <= rel_tol;
        }
        check(c_ok, "mdct_coef");

        if (errs) ++tally.frames_mismatched;
    }
}

std::vector<std::string> corpus_files() {
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(SPLICELOC_TEST_DATA_DIR "/corpus"))
        if (e.path().extension() == ".mp3") out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace spliceloc::testing
