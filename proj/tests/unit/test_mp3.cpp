#include <cmath>
#include <cstring>
#include <functional>
#include <random>

#include "bit_writer.hpp"
#include "doctest.h"
#include "mp3/huffman_tables.hpp"
#include "parser_oracle.hpp"
#include "reference_decoder.h"
#include "synthetic_stream.hpp"
#include "spliceloc/error.hpp"
#include "spliceloc/mp3/codec_record.hpp"
#include "spliceloc/mp3/huffman.hpp"
#include "spliceloc/mp3/requantize.hpp"

using namespace spliceloc;
using namespace spliceloc::mp3;
using spliceloc::testing::BitWriter;

namespace {

template <class F>
Errc error_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return Errc::invalid_argument;
}

// 128 kbps, 44.1 kHz, no padding, stereo, no CRC.
constexpr std::uint8_t cbr128_header[4] = {0xFF, 0xFB, 0x90, 0x04};

std::vector<std::uint8_t> silent_cbr128(int frames, std::size_t frame_bytes = 417) {
    std::vector<std::uint8_t> out;
    for (int f = 0; f < frames; ++f) {
        std::vector<std::uint8_t> frame(frame_bytes, 0);
        std::memcpy(frame.data(), cbr128_header, 4);
        out.insert(out.end(), frame.begin(), frame.end());
    }
    return out;
}

FrameHeader stereo_header() { return *decode_header(cbr128_header, 0); }

// Side info of a stereo frame where only granule 0 / channel 0 is set.
std::vector<std::uint8_t> side_info_frame(const std::function<void(BitWriter&)>& gr0ch0) {
    BitWriter w;
    w.put(0xFFFB9004u, 32);
    w.put(0, 9 + 3 + 8);
    const std::size_t start = w.bits();
    gr0ch0(w);
    while (w.bits() < start + 59) w.put_bit(0);
    auto out = w.bytes(417);
    return out;
}

SideInfo long_side(int big_values, int table, int part2_3_length) {
    SideInfo s;
    s.big_values = big_values;
    s.table_select = {table, table, table};
    s.part2_3_length = part2_3_length;
    s.region0_count = 15;
    s.region1_count = 7;
    return s;
}

double kraft_sum(const detail::HuffmanTree& tree, std::size_t point, int depth, int& leaves) {
    const auto& nodes = tree.nodes;
    if ((nodes[point] & 0xFF00u) == 0) {
        ++leaves;
        return std::ldexp(1.0, -depth);
    }
    std::size_t zero = point, one = point;
    while ((nodes[zero] >> 8) >= 250) zero += nodes[zero] >> 8;
    zero += nodes[zero] >> 8;
    while ((nodes[one] & 0xFFu) >= 250) one += nodes[one] & 0xFFu;
    one += nodes[one] & 0xFFu;
    return kraft_sum(tree, zero, depth + 1, leaves) + kraft_sum(tree, one, depth + 1, leaves);
}

}  // namespace

TEST_CASE("scan_frames: empty input has no frames") {
    CHECK(error_of([] { scan_frames({}); }) == Errc::no_frames_found);
    std::vector<std::uint8_t> junk(5000, 0x55);
    CHECK(error_of([&] { scan_frames(junk); }) == Errc::no_frames_found);
}

TEST_CASE("scan_frames: CBR 128 kbps frames are floor(144*br/sr) bytes apart") {
    const std::size_t expected = 144 * 128000 / 44100;  // 417
    auto file = silent_cbr128(12, expected);
    auto headers = scan_frames(file);
    REQUIRE(headers.size() == 12);
    for (std::size_t i = 0; i < headers.size(); ++i) {
        CHECK(headers[i].byte_offset == i * expected);
        CHECK(headers[i].frame_bytes() == expected);
        CHECK_FALSE(headers[i].follows_gap);
    }
    // independent frame walk
    std::vector<ref_frame_t> ref(32);
    ref.resize(ref_decode_stream(file.data(), file.size(), ref.data(), ref.size()));
    REQUIRE(ref.size() == headers.size());
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(ref[i].byte_offset == headers[i].byte_offset);
}

TEST_CASE("scan_frames: ID3v2 prefix shifts offsets by the tag length") {
    auto plain = silent_cbr128(6);
    std::vector<std::uint8_t> tagged = {'I', 'D', '3', 4, 0, 0, 0, 0, 0, 0};
    tagged.insert(tagged.end(), plain.begin(), plain.end());
    auto a = scan_frames(plain);
    auto b = scan_frames(tagged);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto shifted = a[i];
        shifted.byte_offset += 10;
        CHECK(b[i] == shifted);
    }
}

TEST_CASE("scan_frames: resynchronizes after corrupt bytes and flags the gap") {
    auto file = silent_cbr128(10);
    file.insert(file.begin() + 417 * 5, {0x12, 0x34, 0x56});
    auto h = scan_frames(file);
    REQUIRE(h.size() == 10);
    CHECK(h[5].follows_gap);
    CHECK(h[5].byte_offset == 417 * 5 + 3);
    for (std::size_t i = 0; i < 10; ++i)
        if (i != 5) CHECK_FALSE(h[i].follows_gap);
}

TEST_CASE("scan_frames: layer II and 48 kHz streams are unsupported") {
    // layer II reads bitrate index 9 as 160 kbps: 522-byte frames
    auto file = silent_cbr128(6, 522);
    for (std::size_t f = 0; f < 6; ++f) file[f * 522 + 1] = 0xFD;
    CHECK(error_of([&] { scan_frames(file); }) == Errc::unsupported_format);
    // 48 kHz layer III: 384 bytes at 128 kbps
    file = silent_cbr128(6, 384);
    for (std::size_t f = 0; f < 6; ++f) file[f * 384 + 2] = 0x94;
    CHECK(error_of([&] { scan_frames(file); }) == Errc::unsupported_format);
}

TEST_CASE("scan_frames: totality on arbitrary bytes") {
    std::mt19937 rng(7);
    auto base = silent_cbr128(8);
    for (int trial = 0; trial < 300; ++trial) {
        auto bytes = base;
        const int flips = 1 + static_cast<int>(rng() % 40);
        for (int k = 0; k < flips; ++k) bytes[rng() % bytes.size()] = static_cast<std::uint8_t>(rng());
        bytes.resize(rng() % (bytes.size() + 1));
        try {
            auto h = scan_frames(bytes);
            for (const auto& x : h) CHECK(x.byte_offset + x.frame_bytes() <= bytes.size());
            (void)parse_stream(bytes);
        } catch (const Error&) {
        }
    }
}

TEST_CASE("parse_side_info: all-zero bits decode to zeros") {
    auto frame = silent_cbr128(1);
    auto s = parse_side_info(frame, stereo_header());
    CHECK(s.part2_3_length == 0);
    CHECK(s.big_values == 0);
    CHECK(s.block_type == BlockType::normal);
    CHECK(s == SideInfo{});
}

TEST_CASE("parse_side_info: window switching with block_type 0 is reserved") {
    auto frame = side_info_frame([](BitWriter& w) {
        w.put(0, 12 + 9 + 8 + 4);
        w.put(1, 1);  // window_switching_flag
        w.put(0, 2);  // block_type 00
    });
    CHECK(error_of([&] { parse_side_info(frame, stereo_header()); }) == Errc::reserved_value);
}

TEST_CASE("parse_side_info: big_values above 288 is reserved") {
    auto frame = side_info_frame([](BitWriter& w) {
        w.put(0, 12);
        w.put(289, 9);
    });
    CHECK(error_of([&] { parse_side_info(frame, stereo_header()); }) == Errc::reserved_value);
}

TEST_CASE("parse_side_info: field layout") {
    auto frame = side_info_frame([](BitWriter& w) {
        w.put(1234, 12);
        w.put(100, 9);
        w.put(170, 8);
        w.put(9, 4);
        w.put(1, 1);   // window switching
        w.put(2, 2);   // short
        w.put(1, 1);   // mixed
        w.put(5, 5);
        w.put(13, 5);
        w.put(1, 3);
        w.put(2, 3);
        w.put(7, 3);
        w.put(1, 1);
        w.put(0, 1);
        w.put(1, 1);
    });
    auto s = parse_side_info(frame, stereo_header());
    CHECK(s.part2_3_length == 1234);
    CHECK(s.big_values == 100);
    CHECK(s.global_gain == 170);
    CHECK(s.scalefac_compress == 9);
    CHECK(s.window_switching_flag);
    CHECK(s.block_type == BlockType::short_blocks);
    CHECK(s.mixed_block_flag);
    CHECK(s.table_select == std::array<int, 3>{5, 13, 0});
    CHECK(s.subblock_gain == std::array<int, 3>{1, 2, 7});
    CHECK(s.preflag);
    CHECK_FALSE(s.scalefac_scale);
    CHECK(s.count1table_select);
}

TEST_CASE("parse_side_info: truncated frame") {
    auto frame = silent_cbr128(1);
    frame.resize(4 + 31);
    CHECK(error_of([&] { parse_side_info(frame, stereo_header()); }) == Errc::truncated_frame);
}

TEST_CASE("decode_scalefactors: scalefac_compress 0 consumes nothing") {
    std::vector<std::uint8_t> data(16, 0xFF);
    BitReader bits(data);
    SideInfo s;
    auto sf = decode_scalefactors(bits, s);
    CHECK(bits.position() == 0);
    CHECK(sf.layout == ScalefactorLayout::long_blocks);
    REQUIRE(sf.long_block.size() == 21);
    for (int v : sf.long_block) CHECK(v == 0);
    CHECK(sf.short_block.empty());
}

TEST_CASE("decode_scalefactors: short layout and slen widths") {
    // scalefac_compress 15: slen1 = 4, slen2 = 3
    BitWriter w;
    for (int i = 0; i < 18; ++i) w.put(static_cast<std::uint32_t>(i % 16), 4);
    for (int i = 0; i < 18; ++i) w.put(static_cast<std::uint32_t>(i % 8), 3);
    auto data = w.bytes(32);
    BitReader bits(data);
    SideInfo s;
    s.scalefac_compress = 15;
    s.window_switching_flag = true;
    s.block_type = BlockType::short_blocks;
    auto sf = decode_scalefactors(bits, s);
    CHECK(bits.position() == 18 * 4 + 18 * 3);
    CHECK(sf.layout == ScalefactorLayout::short_blocks);
    CHECK(sf.long_block.empty());
    REQUIRE(sf.short_block.size() == 12);
    CHECK(sf.short_block[0] == std::array<int, 3>{0, 1, 2});
    CHECK(sf.short_block[5] == std::array<int, 3>{15, 0, 1});
    CHECK(sf.short_block[6] == std::array<int, 3>{0, 1, 2});
    CHECK(sf.short_block[11] == std::array<int, 3>{7, 0, 1});
}

TEST_CASE("decode_scalefactors: running out of data") {
    std::vector<std::uint8_t> data(2, 0xFF);
    BitReader bits(data);
    SideInfo s;
    s.scalefac_compress = 15;
    CHECK(error_of([&] { decode_scalefactors(bits, s); }) == Errc::bit_underflow);
}

TEST_CASE("huffman_decode: big_values 0 and no count1 region is all zero") {
    std::vector<std::uint8_t> data(8, 0xAA);
    BitReader bits(data);
    auto q = huffman_decode(bits, long_side(0, 0, 0), 0);
    for (int v : q.values) CHECK(v == 0);
    CHECK(q.zero_lines == 576);
}

TEST_CASE("huffman_decode: one bit short of a codeword underflows") {
    // table 1: (1,1) is coded 000, then two sign bits
    BitWriter w;
    w.put(0b000, 3);
    w.put(0b10, 2);
    auto data = w.bytes(8);
    {
        BitReader bits(data);
        auto q = huffman_decode(bits, long_side(1, 1, 5), 5);
        CHECK(q.values[0] == -1);
        CHECK(q.values[1] == 1);
        CHECK(q.big_value_lines + q.count1_lines + q.zero_lines == 576);
    }
    BitReader bits(data);
    CHECK(error_of([&] { huffman_decode(bits, long_side(1, 1, 4), 4); }) == Errc::bit_underflow);
}

TEST_CASE("huffman trees are complete prefix codes") {
    const auto& trees = detail::huffman_trees();
    for (std::size_t t = 0; t < trees.size(); ++t) {
        if (trees[t].nodes.empty()) continue;
        CAPTURE(t);
        int leaves = 0;
        CHECK(kraft_sum(trees[t], 0, 0, leaves) == doctest::Approx(1.0).epsilon(1e-12));
        if (t >= 32) CHECK(leaves == 16);
    }
}

TEST_CASE("requantize: zero and unity") {
    std::array<int, 576> q{};
    SideInfo s;
    s.global_gain = 210;
    ScaleFactors sf{ScalefactorLayout::long_blocks, std::vector<int>(21, 0), {}};
    auto r = requantize(q, s, sf);
    for (double v : r) CHECK(v == 0.0);
    q.fill(1);
    q[5] = -1;
    r = requantize(q, s, sf);
    CHECK(r[0] == 1.0);
    CHECK(r[5] == -1.0);
    CHECK(r[575] == 1.0);
    q[0] = 8;  // 8^(4/3) = 16
    CHECK(requantize(q, s, sf)[0] == doctest::Approx(16.0).epsilon(1e-14));
}

TEST_CASE("requantize: scalefactor and preflag terms") {
    std::array<int, 576> q{};
    q.fill(1);
    SideInfo s;
    s.global_gain = 210;
    s.scalefac_scale = true;
    s.preflag = true;
    ScaleFactors sf{ScalefactorLayout::long_blocks, std::vector<int>(21, 0), {}};
    sf.long_block[0] = 1;
    auto r = requantize(q, s, sf);
    CHECK(r[0] == doctest::Approx(std::pow(2.0, -1.0)));        // -(1 * 4) / 4
    CHECK(r[4 * 18] == doctest::Approx(std::pow(2.0, -1.0)));   // band 11 has pretab 1
}

TEST_CASE("extract_codec_record: frame 0 with main_data_begin > 0 underflows") {
    auto file = silent_cbr128(6);
    file[4] = 0x02;  // main_data_begin = 4
    auto frames = parse_stream(file);
    REQUIRE(frames.size() == 6);
    CHECK_FALSE(frames[0].usable());
    CHECK(frames[0].failure == Errc::reservoir_underflow);
    CHECK(frames[1].usable());
    CHECK(error_of([&] { extract_codec_record(file, 0); }) == Errc::reservoir_underflow);
    CHECK(extract_codec_record(file, 1).frame_index == 1);
    CHECK(error_of([&] { extract_codec_record(file, 6); }) == Errc::invalid_argument);
}

TEST_CASE("corpus: records are well formed and deterministic") {
    for (const auto& path : spliceloc::testing::corpus_files()) {
        CAPTURE(path);
        auto bytes = read_file(path);
        auto a = parse_stream(bytes);
        auto b = parse_stream(bytes);
        REQUIRE(a.size() == b.size());
        std::size_t usable = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].record == b[i].record);
            if (!a[i].usable()) continue;
            ++usable;
            const auto& m = a[i].record->mdct;
            for (std::size_t k = 0; k < 576; ++k) {
                const int q = m.quantized[k];
                const float r = m.requantized[k];
                CHECK(((q > 0) == (r > 0) && (q < 0) == (r < 0) && (q == 0) == (r == 0)));
            }
        }
        CHECK(usable + 1 >= a.size());
    }
}

TEST_CASE("corpus: encoder tags expose delay") {
    auto a = read_encoder_tag(read_file(SPLICELOC_TEST_DATA_DIR "/corpus/encA_cbr128_stereo.mp3"));
    REQUIRE(a.has_value());
    CHECK(a->delay_samples > 0);
    CHECK_FALSE(read_encoder_tag(read_file(SPLICELOC_TEST_DATA_DIR "/corpus/encB_cbr128_stereo.mp3")).has_value());
}

TEST_CASE("corpus: every field matches the reference decoder") {
    spliceloc::testing::OracleTally tally;
    for (const auto& path : spliceloc::testing::corpus_files())
        spliceloc::testing::compare_with_reference(read_file(path), path, tally);
    for (const auto& f : tally.first_failures) MESSAGE(f);
    CHECK(tally.frames_compared >= 100);
    CHECK(tally.clean());
}

TEST_CASE("synthetic streams: all tables and block layouts match the reference decoder") {
    spliceloc::testing::OracleTally tally;
    for (std::uint32_t seed = 1; seed <= 40; ++seed)
        spliceloc::testing::compare_with_reference(spliceloc::testing::synthetic_stream(seed, 12),
                                                   "synthetic#" + std::to_string(seed), tally);
    for (const auto& f : tally.first_failures) MESSAGE(f);
    CHECK(tally.frames_by_block_type["short+mixed"] > 20);
    CHECK(tally.frames_compared == 480);
    CHECK(tally.clean());
}
