#include "spliceloc/compression_type.hpp"

namespace spliceloc {

std::optional<std::uint8_t> type_code(RateMode mode, int value) noexcept {
    const auto& grid = mode == RateMode::cbr ? cbr_bitrates : vbr_qualities;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid[i] == value) return static_cast<std::uint8_t>(i + (mode == RateMode::vbr ? 6 : 0));
    return std::nullopt;
}

std::string type_name(std::uint8_t code) {
    if (code < 6) return "C" + std::to_string(cbr_bitrates[code]);
    if (code < 12) return "V" + std::to_string(vbr_qualities[code - 6u]);
    return "?";
}

}  // namespace spliceloc
