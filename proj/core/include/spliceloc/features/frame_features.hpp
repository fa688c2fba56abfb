#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>

#include "spliceloc/mp3/codec_record.hpp"

namespace spliceloc::features {

inline constexpr int mdct_rows = 32;
inline constexpr int mdct_cols = 18;
inline constexpr int mdct_size = mdct_rows * mdct_cols;
// row 0: long bands 0..11, row 1: long bands 12..20 (zero padded),
// rows 2..4: short-block window 0/1/2, bands 0..11
inline constexpr int scalefac_rows = 5;
inline constexpr int scalefac_cols = 12;
inline constexpr int scalefac_size = scalefac_rows * scalefac_cols;
inline constexpr int n_scalars = 18;
inline constexpr int feature_size = mdct_size + scalefac_size + n_scalars;

struct FrameFeatures {
    std::array<float, mdct_size> mdct{};          // sub-band major: [18*s + k]
    std::array<float, scalefac_size> scalefac{};  // row major 5x12
    std::array<float, n_scalars> scalars{};

    float& at(int i) noexcept;
    float at(int i) const noexcept;

    friend bool operator==(const FrameFeatures&, const FrameFeatures&) = default;
};

/// Names of the scalar slots, in storage order.
const std::array<std::string_view, n_scalars>& scalar_names() noexcept;

/// Unnormalized features of one frame.
FrameFeatures raw_features(const mp3::CodecFrameRecord& record);

/// Per-element standardization. Elements with zero spread keep unit scale.
class NormalizationStats {
public:
    static NormalizationStats identity();
    static NormalizationStats compute(std::span<const FrameFeatures> frames);

    FrameFeatures apply(const FrameFeatures& raw) const;

    std::string to_json() const;
    static NormalizationStats from_json(const std::string& text);
    void save(const std::string& path) const;
    static NormalizationStats load(const std::string& path);

    const std::array<double, feature_size>& mean() const noexcept { return mean_; }
    const std::array<double, feature_size>& stddev() const noexcept { return std_; }

private:
    std::array<double, feature_size> mean_{};
    std::array<double, feature_size> std_{};
};

FrameFeatures build_frame_features(const mp3::CodecFrameRecord& record, const NormalizationStats& norm);

/// Throws UnusableRecord for frames that failed to decode.
FrameFeatures build_frame_features(const mp3::ParsedFrame& frame, const NormalizationStats& norm);

}  // namespace spliceloc::features
