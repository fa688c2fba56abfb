#pragma once

#include <cstdint>
#include <vector>

namespace spliceloc {

/// Per-frame ground truth or estimate: 0 = single compressed, 1 = multiply
/// compressed.
struct LabelSequence {
    std::vector<std::uint8_t> y;

    std::size_t size() const noexcept { return y.size(); }
    friend bool operator==(const LabelSequence&, const LabelSequence&) = default;
};

}  // namespace spliceloc
