#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "spliceloc/compression_type.hpp"
#include "spliceloc/features/windows.hpp"
#include "spliceloc/labels.hpp"

namespace spliceloc::forge {

enum class Encoder : std::uint8_t { a, b };

std::string to_string(Encoder e);

struct CompressionSpec {
    RateMode mode = RateMode::cbr;
    int value = 128;  // kbps for CBR, quality 1..6 for VBR
    Encoder encoder = Encoder::a;

    std::uint8_t type_code() const;  // throws InvalidArgument off the grid
    std::string name() const;        // e.g. "C128/encoderA"

    friend bool operator==(const CompressionSpec&, const CompressionSpec&) = default;
};

struct SlicePlan {
    int slice_index = 1;  // 1-based
    std::size_t start = 0;  // first frame, relative to the segment
    std::size_t length = 10;
    std::vector<CompressionSpec> chain;  // chain.back() is the segment's final encode

    int n_compressions() const noexcept { return static_cast<int>(chain.size()); }
};

struct Segment {
    std::size_t start_frame = 0;
    std::size_t frames = 0;
};

inline constexpr std::size_t slice_frames = 10;
inline constexpr std::size_t min_segment_frames = 80;
inline constexpr std::size_t max_segment_frames = 320;

/// Consecutive segments from the start of a source of `total_samples`
/// sample frames, each of uniform length in {80, 90, ..., 320} capped by what
/// remains; a remainder under 80 frames is dropped. Throws SourceTooShort.
std::vector<Segment> segment_source(std::size_t total_samples, std::mt19937_64& rng);

/// Compression drawn uniformly from the 12-setting grid and the two encoders.
CompressionSpec draw_spec(std::mt19937_64& rng);

/// Slices of 10 frames; odd slices get 2 or 3 compressions, even slices 1;
/// one final compression shared by all slices. With `variable_slices`,
/// slice lengths are uniform in [10, 80] frames (the last one truncated) and
/// every slice gets 1, 2, or 3 compressions.
std::vector<SlicePlan> plan_segment(std::size_t frames, std::mt19937_64& rng, bool variable_slices = false);

/// y_l = 1 iff frame l lies in a slice compressed more than once.
LabelSequence labels_from_plans(const std::vector<SlicePlan>& plans);

/// Per-frame compression history implied by the plans.
std::vector<features::FrameProvenance> provenance_from_plans(const std::vector<SlicePlan>& plans);

/// Number of length-20, stride-8 windows of a gap-free segment.
std::size_t window_count(std::size_t frames) noexcept;

struct SplitFractions {
    double train = 0.54, val = 0.13, test = 0.33;
};

/// Assigns whole segments (weighted by their window counts) to splits:
/// segments are visited in a seeded random order, largest first, and each
/// goes to the split furthest below its target share. While fewer segments
/// remain than there are empty splits, empty splits are filled first.
std::vector<features::Split> partition(const std::vector<std::size_t>& window_counts, std::mt19937_64& rng,
                                       SplitFractions fractions = {});

}  // namespace spliceloc::forge
