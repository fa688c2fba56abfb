#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace spliceloc {

enum class RateMode : std::uint8_t { cbr, vbr };

inline constexpr std::array<int, 6> cbr_bitrates = {64, 96, 128, 160, 192, 256};
inline constexpr std::array<int, 6> vbr_qualities = {1, 2, 3, 4, 5, 6};
inline constexpr int n_compression_types = 12;

/// Compact code of a grid setting: CBR bitrates 0..5, VBR qualities 6..11.
/// Returns nullopt for settings outside the grid.
std::optional<std::uint8_t> type_code(RateMode mode, int value) noexcept;

/// "C64" ... "C256", "V1" ... "V6"; "?" for unknown codes.
std::string type_name(std::uint8_t code);

}  // namespace spliceloc
