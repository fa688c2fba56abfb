#include "spliceloc/mp3/requantize.hpp"

#include <cmath>
#include <cstdlib>

#include "band_tables.hpp"

namespace spliceloc::mp3 {
namespace {

double power_law(int q, double exponent_quarters) {
    if (q == 0) return 0.0;
    const double magnitude = std::pow(static_cast<double>(std::abs(q)), 4.0 / 3.0);
    const double value = magnitude * std::exp2(exponent_quarters / 4.0);
    return q < 0 ? -value : value;
}

}  // namespace

std::array<double, 576> requantize(const std::array<int, 576>& quantized, const SideInfo& side,
                                   const ScaleFactors& scalefactors) {
    std::array<double, 576> out{};
    // Scalefactor step in quarter powers of two: 2 (×√2) or 4 (×2).
    const int step = side.scalefac_scale ? 4 : 2;
    const int base = side.global_gain - 210;

    const auto long_exponent = [&](std::size_t band) {
        int sf = band < scalefactors.long_block.size() ? scalefactors.long_block[band] : 0;
        if (side.preflag) sf += detail::pretab[band];
        return static_cast<double>(base - step * sf);
    };

    std::size_t line = 0;
    const auto fill_short = [&](std::size_t first_band) {
        for (std::size_t band = first_band; band < 13 && line < 576; ++band) {
            const int width = detail::short_band_start[band + 1] - detail::short_band_start[band];
            for (std::size_t window = 0; window < 3; ++window) {
                const int sf = band < scalefactors.short_block.size() ? scalefactors.short_block[band][window] : 0;
                const double exponent = base - 8 * side.subblock_gain[window] - step * sf;
                for (int k = 0; k < width && line < 576; ++k, ++line) {
                    out[line] = power_law(quantized[line], exponent);
                }
            }
        }
    };

    switch (scalefactors.layout) {
    case ScalefactorLayout::long_blocks:
        for (std::size_t band = 0; band < 22; ++band) {
            const double exponent = long_exponent(band);
            for (; line < static_cast<std::size_t>(detail::long_band_start[band + 1]); ++line) {
                out[line] = power_law(quantized[line], exponent);
            }
        }
        break;
    case ScalefactorLayout::short_blocks:
        fill_short(0);
        break;
    case ScalefactorLayout::mixed_blocks:
        for (std::size_t band = 0; band < 8; ++band) {
            const double exponent = long_exponent(band);
            for (; line < static_cast<std::size_t>(detail::long_band_start[band + 1]); ++line) {
                out[line] = power_law(quantized[line], exponent);
            }
        }
        fill_short(3);
        break;
    }
    return out;
}

}  // namespace spliceloc::mp3
