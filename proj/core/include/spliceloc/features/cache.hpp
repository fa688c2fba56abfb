#pragma once

#include <span>
#include <string>
#include <vector>

#include "spliceloc/features/windows.hpp"

namespace spliceloc::features {

// Feature cache layout (little endian):
//
//   char[8]  "SPLCFEAT"
//   u32      version (1)
//   u32      mdct_size, scalefac_size, n_scalars   (576, 60, 18)
//   u32      sequence count
//   per sequence:
//     u32 id length, id bytes (UTF-8)
//     u8  split (0 train, 1 val, 2 test, 255 none)
//     u32 frame count
//     per frame:
//       u8 flags (bit0 usable, bit1 follows_gap, bit2 extension label)
//       u8 label, u8 n_compressions, u8 last_type
//       f32[mdct_size + scalefac_size + n_scalars] raw features
inline constexpr std::uint32_t cache_version = 1;

void write_cache(const std::string& path, std::span<const FrameSequence> sequences);

/// Throws FormatError on a bad magic/version/layout, IoError on short reads.
std::vector<FrameSequence> read_cache(const std::string& path);

}  // namespace spliceloc::features
