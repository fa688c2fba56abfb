#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "spliceloc/features/frame_features.hpp"
#include "spliceloc/model/network.hpp"

namespace spliceloc::app {

/// Start time of a frame in seconds.
double frame_time(std::size_t frame_index) noexcept;

/// Window starts covering `n` positions: 0, stride, ... while start + L <= n,
/// plus one final window ending at position n - 1 when the tail is not
/// covered. Empty for n < L.
std::vector<std::size_t> window_cover(std::size_t n, int L = 20, int stride = 8);

struct FrameDecision {
    std::size_t frame_index = 0;
    bool usable = false;
    std::optional<std::uint8_t> label;  // empty for unusable frames
    double probability = 0.0;           // mean class-1 probability over covering windows
};

struct Region {
    std::size_t first_frame = 0, last_frame = 0;  // inclusive
};

struct LocalizationResult {
    std::string file;
    std::vector<FrameDecision> frames;
    std::vector<Region> regions;  // maximal runs of label 1 among labelled frames

    std::string to_json() const;
};

/// Windows run over the usable frames in order (unusable frames are left
/// out and unlabelled); overlapping windows are averaged and thresholded at
/// 0.5. Throws FileTooShort with fewer than L usable frames.
LocalizationResult localize(const std::vector<mp3::ParsedFrame>& frames, const model::ModelParameters& params,
                            const features::NormalizationStats& norm, std::string file = {});

}  // namespace spliceloc::app
