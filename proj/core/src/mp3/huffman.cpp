#include "spliceloc/mp3/huffman.hpp"

#include <algorithm>
#include <string>

#include "band_tables.hpp"
#include "huffman_tables.hpp"
#include "spliceloc/error.hpp"

namespace spliceloc::mp3 {
namespace {

constexpr int max_codeword_bits = 32;

/// Walks a decoding tree and returns the leaf's packed (x << 4 | y) value.
int walk_tree(BitReader& bits, const detail::HuffmanTree& tree) {
    const auto& nodes = tree.nodes;
    std::size_t point = 0;
    for (int depth = 0;; ++depth) {
        const unsigned word = nodes[point];
        if ((word & 0xFF00u) == 0) return static_cast<int>(word & 0xFFu);
        if (depth >= max_codeword_bits) break;
        if (bits.read_bit()) {
            while ((nodes[point] & 0xFFu) >= 250) point += nodes[point] & 0xFFu;
            point += nodes[point] & 0xFFu;
        } else {
            while ((nodes[point] >> 8) >= 250) point += nodes[point] >> 8;
            point += nodes[point] >> 8;
        }
        if (point >= nodes.size()) break;
    }
    throw Error(Errc::invalid_codeword, "no Huffman codeword matches");
}

int signed_value(BitReader& bits, int magnitude) {
    return magnitude != 0 && bits.read_bit() ? -magnitude : magnitude;
}

void decode_pair(BitReader& bits, int table_index, int* out) {
    if (table_index == 4 || table_index == 14) {
        throw Error(Errc::invalid_codeword, "Huffman table " + std::to_string(table_index) + " is not defined");
    }
    const auto& tree = detail::huffman_trees()[static_cast<std::size_t>(table_index)];
    if (tree.nodes.empty()) {
        out[0] = out[1] = 0;
        return;
    }
    const int leaf = walk_tree(bits, tree);
    int x = leaf >> 4;
    int y = leaf & 0x0F;
    const auto linbits = static_cast<unsigned>(tree.linbits);
    if (linbits > 0 && x == 15) x += static_cast<int>(bits.read(linbits));
    out[0] = signed_value(bits, x);
    if (linbits > 0 && y == 15) y += static_cast<int>(bits.read(linbits));
    out[1] = signed_value(bits, y);
}

void decode_quad(BitReader& bits, bool table_b, int* out) {
    const auto& tree = detail::huffman_trees()[table_b ? 33 : 32];
    const int leaf = walk_tree(bits, tree);
    for (int i = 0; i < 4; ++i) out[i] = signed_value(bits, (leaf >> (3 - i)) & 1);
}

}  // namespace

QuantizedSpectrum huffman_decode(BitReader& bits, const SideInfo& side, std::size_t part2_3_end) {
    QuantizedSpectrum out;
    if (bits.position() > part2_3_end) {
        throw Error(Errc::bit_underflow, "scalefactors exceed part2_3_length");
    }

    int region1_start = 36;
    int region2_start = 576;
    if (!side.window_switching_flag) {
        const int r1 = std::min(side.region0_count + 1, 22);
        const int r2 = std::min(side.region0_count + side.region1_count + 2, 22);
        region1_start = detail::long_band_start[static_cast<std::size_t>(r1)];
        region2_start = detail::long_band_start[static_cast<std::size_t>(r2)];
    }

    const int big_lines = side.big_values * 2;
    for (int i = 0; i < big_lines; i += 2) {
        const int region = i < region1_start ? 0 : (i < region2_start ? 1 : 2);
        decode_pair(bits, side.table_select[static_cast<std::size_t>(region)], &out.values[static_cast<std::size_t>(i)]);
        if (bits.position() > part2_3_end) {
            throw Error(Errc::bit_underflow, "big_values region exceeds part2_3_length");
        }
    }

    int index = big_lines;
    while (index + 4 <= 576 && bits.position() < part2_3_end) {
        int quad[4];
        decode_quad(bits, side.count1table_select, quad);
        if (bits.position() > part2_3_end) break;  // overrunning quad is discarded
        std::copy(quad, quad + 4, out.values.begin() + index);
        index += 4;
    }

    out.big_value_lines = big_lines;
    out.count1_lines = index - big_lines;
    out.zero_lines = 576 - index;
    bits.seek(part2_3_end);
    return out;
}

}  // namespace spliceloc::mp3
