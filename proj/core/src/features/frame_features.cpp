#include "spliceloc/features/frame_features.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "spliceloc/error.hpp"

namespace spliceloc::features {

float& FrameFeatures::at(int i) noexcept {
    if (i < mdct_size) return mdct[static_cast<std::size_t>(i)];
    if (i < mdct_size + scalefac_size) return scalefac[static_cast<std::size_t>(i - mdct_size)];
    return scalars[static_cast<std::size_t>(i - mdct_size - scalefac_size)];
}

float FrameFeatures::at(int i) const noexcept { return const_cast<FrameFeatures*>(this)->at(i); }

const std::array<std::string_view, n_scalars>& scalar_names() noexcept {
    static constexpr std::array<std::string_view, n_scalars> names = {
        "part_23_length", "scalefac_compress", "scalefac_scale",  "preflag",
        "global_gain",    "subblock_gain_0",   "subblock_gain_1", "subblock_gain_2",
        "big_values",     "region0_count",     "region1_count",   "table_select_0",
        "table_select_1", "table_select_2",    "count1_table",    "block_type",
        "mixed_block_flag", "window_switching_flag"};
    return names;
}

FrameFeatures raw_features(const mp3::CodecFrameRecord& record) {
    FrameFeatures f;
    std::copy(record.mdct.requantized.begin(), record.mdct.requantized.end(), f.mdct.begin());

    const auto& sf = record.scalefactors;
    for (std::size_t b = 0; b < sf.long_block.size(); ++b) f.scalefac[b] = static_cast<float>(sf.long_block[b]);
    for (std::size_t b = 0; b < sf.short_block.size(); ++b)
        for (std::size_t w = 0; w < 3; ++w)
            f.scalefac[(2 + w) * scalefac_cols + b] = static_cast<float>(sf.short_block[b][w]);

    const auto& s = record.side;
    const int values[n_scalars] = {s.part2_3_length,   s.scalefac_compress, s.scalefac_scale,   s.preflag,
                                   s.global_gain,      s.subblock_gain[0],  s.subblock_gain[1], s.subblock_gain[2],
                                   s.big_values,       s.region0_count,     s.region1_count,    s.table_select[0],
                                   s.table_select[1],  s.table_select[2],   s.count1table_select,
                                   static_cast<int>(s.block_type), s.mixed_block_flag, s.window_switching_flag};
    for (int i = 0; i < n_scalars; ++i) f.scalars[static_cast<std::size_t>(i)] = static_cast<float>(values[i]);
    return f;
}

NormalizationStats NormalizationStats::identity() {
    NormalizationStats n;
    n.std_.fill(1.0);
    return n;
}

NormalizationStats NormalizationStats::compute(std::span<const FrameFeatures> frames) {
    if (frames.empty()) throw Error(Errc::empty_dataset, "cannot compute normalization from zero frames");
    NormalizationStats n;
    std::array<double, feature_size> m2{};
    double count = 0;
    for (const auto& f : frames) {
        count += 1;
        for (int i = 0; i < feature_size; ++i) {
            const double x = f.at(i);
            const auto k = static_cast<std::size_t>(i);
            const double delta = x - n.mean_[k];
            n.mean_[k] += delta / count;
            m2[k] += delta * (x - n.mean_[k]);
        }
    }
    for (std::size_t k = 0; k < feature_size; ++k) {
        const double sd = std::sqrt(m2[k] / count);
        n.std_[k] = sd > 1e-12 ? sd : 1.0;
    }
    return n;
}

FrameFeatures NormalizationStats::apply(const FrameFeatures& raw) const {
    FrameFeatures out;
    for (int i = 0; i < feature_size; ++i) {
        const auto k = static_cast<std::size_t>(i);
        out.at(i) = static_cast<float>((raw.at(i) - mean_[k]) / std_[k]);
    }
    return out;
}

std::string NormalizationStats::to_json() const {
    nlohmann::json j;
    j["schema"] = "spliceloc.normalization/1";
    j["layout"] = {{"mdct", mdct_size}, {"scalefac", scalefac_size}, {"scalars", n_scalars}};
    j["mean"] = mean_;
    j["std"] = std_;
    return j.dump();
}

NormalizationStats NormalizationStats::from_json(const std::string& text) {
    NormalizationStats n;
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("schema") != "spliceloc.normalization/1") throw Error(Errc::format_error, "unknown normalization schema");
        const auto mean = j.at("mean").get<std::vector<double>>();
        const auto sd = j.at("std").get<std::vector<double>>();
        if (mean.size() != feature_size || sd.size() != feature_size)
            throw Error(Errc::shape_mismatch, "normalization vectors must have " + std::to_string(feature_size) + " entries");
        std::copy(mean.begin(), mean.end(), n.mean_.begin());
        std::copy(sd.begin(), sd.end(), n.std_.begin());
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::format_error, e.what());
    }
    return n;
}

void NormalizationStats::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error(Errc::io_error, "cannot write " + path);
    out << to_json() << '\n';
}

NormalizationStats NormalizationStats::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

FrameFeatures build_frame_features(const mp3::CodecFrameRecord& record, const NormalizationStats& norm) {
    return norm.apply(raw_features(record));
}

FrameFeatures build_frame_features(const mp3::ParsedFrame& frame, const NormalizationStats& norm) {
    if (!frame.record) throw Error(Errc::unusable_record, "frame at byte " + std::to_string(frame.header.byte_offset) + " is unusable");
    return build_frame_features(*frame.record, norm);
}

}  // namespace spliceloc::features
