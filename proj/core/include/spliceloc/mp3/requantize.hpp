#pragma once

#include <array>

#include "spliceloc/mp3/scalefactors.hpp"
#include "spliceloc/mp3/side_info.hpp"

namespace spliceloc::mp3 {

/// Inverts the quantizer: sign(q)·|q|^(4/3)·2^(gain/4) with the gain built
/// from global_gain, subblock_gain, scalefac_scale, preflag and the
/// scalefactors. Values stay in bitstream order (short blocks are not
/// reordered) and no stereo processing is applied.
std::array<double, 576> requantize(const std::array<int, 576>& quantized, const SideInfo& side,
                                   const ScaleFactors& scalefactors);

}  // namespace spliceloc::mp3
