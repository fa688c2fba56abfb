#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace spliceloc::mp3::detail {

struct HuffmanTree {
    std::span<const std::uint16_t> nodes;
    int linbits = 0;
    bool quads = false;
};

/// Trees 0..31 are the big_values tables; 32 and 33 the count1 quad tables.
const std::array<HuffmanTree, 34>& huffman_trees();

}  // namespace spliceloc::mp3::detail
