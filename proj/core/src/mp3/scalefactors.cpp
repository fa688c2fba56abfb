#include "spliceloc/mp3/scalefactors.hpp"

#include "band_tables.hpp"

namespace spliceloc::mp3 {

std::string_view to_string(ScalefactorLayout layout) noexcept {
    switch (layout) {
    case ScalefactorLayout::long_blocks: return "long";
    case ScalefactorLayout::short_blocks: return "short";
    case ScalefactorLayout::mixed_blocks: return "mixed";
    }
    return "unknown";
}

ScalefactorLayout layout_for(const SideInfo& side) noexcept {
    if (side.window_switching_flag && side.block_type == BlockType::short_blocks) {
        return side.mixed_block_flag ? ScalefactorLayout::mixed_blocks : ScalefactorLayout::short_blocks;
    }
    return ScalefactorLayout::long_blocks;
}

ScaleFactors decode_scalefactors(BitReader& bits, const SideInfo& side) {
    const auto [slen1, slen2] = detail::scalefactor_widths.at(static_cast<std::size_t>(side.scalefac_compress));
    const auto read = [&bits](int width) { return static_cast<int>(bits.read(static_cast<unsigned>(width))); };

    ScaleFactors out;
    out.layout = layout_for(side);
    switch (out.layout) {
    case ScalefactorLayout::long_blocks:
        out.long_block.resize(21);
        for (int band = 0; band < 21; ++band) out.long_block[band] = read(band < 11 ? slen1 : slen2);
        break;
    case ScalefactorLayout::short_blocks:
        out.short_block.resize(12);
        for (int band = 0; band < 12; ++band) {
            for (auto& value : out.short_block[band]) value = read(band < 6 ? slen1 : slen2);
        }
        break;
    case ScalefactorLayout::mixed_blocks:
        out.long_block.resize(8);
        for (auto& value : out.long_block) value = read(slen1);
        out.short_block.resize(12);
        for (int band = 3; band < 12; ++band) {
            for (auto& value : out.short_block[band]) value = read(band < 6 ? slen1 : slen2);
        }
        break;
    }
    return out;
}

}  // namespace spliceloc::mp3
