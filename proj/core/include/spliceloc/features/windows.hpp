#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spliceloc/features/frame_features.hpp"
#include "spliceloc/labels.hpp"

namespace spliceloc::features {

inline constexpr int default_window = 20;
inline constexpr int default_stride = 8;

/// Compression history of one frame as recorded by the forge.
struct FrameProvenance {
    std::uint8_t n_compressions = 0;   // 0 = unknown
    std::uint8_t last_type = 0xFF;     // forge::type_code of the final encode, 0xFF = unknown
    bool extension = false;            // label taken from the nearest slice (encoder padding)

    friend bool operator==(const FrameProvenance&, const FrameProvenance&) = default;
};

struct FrameSlot {
    FrameFeatures features;   // raw (unnormalized) values
    bool usable = true;
    bool follows_gap = false;
    std::uint8_t label = 0;
    FrameProvenance provenance;

    friend bool operator==(const FrameSlot&, const FrameSlot&) = default;
};

enum class Split : std::uint8_t { train = 0, val = 1, test = 2, none = 0xFF };

/// All frames of one parsed file (a forged segment or a file under analysis).
struct FrameSequence {
    std::string source_id;
    Split split = Split::none;
    std::vector<FrameSlot> frames;

    friend bool operator==(const FrameSequence&, const FrameSequence&) = default;
};

struct WindowOrigin {
    std::string source_id;
    std::size_t start = 0;
};

struct FeatureWindow {
    std::vector<FrameFeatures> features;
    std::vector<std::uint8_t> labels;
    std::vector<FrameProvenance> provenance;
    WindowOrigin origin;
};

/// Raw features for every frame of a parsed stream. Labels, when given, must
/// align 1:1 with the frames (LengthMismatch otherwise).
FrameSequence sequence_from_stream(std::string source_id, std::span<const mp3::ParsedFrame> frames,
                                   const LabelSequence* labels = nullptr);

/// True when [start, start + length) holds only usable frames and no frame
/// after the first follows a resynchronization gap.
bool contiguous(const FrameSequence& seq, std::size_t start, std::size_t length);

/// Window starts 0, stride, 2*stride, ... with start + L <= N, skipping any
/// window that is not contiguous.
std::vector<std::size_t> window_starts(const FrameSequence& seq, int L = default_window, int stride = default_stride);

FeatureWindow window_at(const FrameSequence& seq, std::size_t start, int L = default_window);

std::vector<FeatureWindow> make_windows(const FrameSequence& seq, int L = default_window, int stride = default_stride);

/// Replaces every frame's features by their standardized values.
void normalize_in_place(FrameSequence& seq, const NormalizationStats& norm);

}  // namespace spliceloc::features
