#pragma once

#include <array>

namespace spliceloc::mp3::detail {

// Scalefactor band boundaries for MPEG-1 at 44.1 kHz.
inline constexpr std::array<int, 23> long_band_start = {
    0, 4, 8, 12, 16, 20, 24, 30, 36, 44, 52, 62, 74, 90, 110, 134, 162, 196, 238, 288, 342, 418, 576};

inline constexpr std::array<int, 14> short_band_start = {
    0, 4, 8, 12, 16, 22, 30, 40, 52, 66, 84, 106, 136, 192};

inline constexpr std::array<int, 22> pretab = {
    0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 3, 3, 3, 2, 0};

// (slen1, slen2) bit widths indexed by scalefac_compress.
inline constexpr std::array<std::array<int, 2>, 16> scalefactor_widths = {{
    {0, 0}, {0, 1}, {0, 2}, {0, 3}, {3, 0}, {1, 1}, {1, 2}, {1, 3},
    {2, 1}, {2, 2}, {2, 3}, {3, 1}, {3, 2}, {3, 3}, {4, 2}, {4, 3},
}};

}  // namespace spliceloc::mp3::detail
