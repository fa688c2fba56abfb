#include "spliceloc/features/windows.hpp"

#include "spliceloc/error.hpp"

namespace spliceloc::features {

FrameSequence sequence_from_stream(std::string source_id, std::span<const mp3::ParsedFrame> frames,
                                   const LabelSequence* labels) {
    if (labels && labels->size() != frames.size()) {
        throw Error(Errc::length_mismatch, std::to_string(labels->size()) + " labels for " +
                                               std::to_string(frames.size()) + " frames");
    }
    FrameSequence seq;
    seq.source_id = std::move(source_id);
    seq.frames.resize(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        auto& slot = seq.frames[i];
        slot.usable = frames[i].usable();
        slot.follows_gap = frames[i].header.follows_gap;
        if (slot.usable) slot.features = raw_features(*frames[i].record);
        if (labels) slot.label = labels->y[i];
    }
    return seq;
}

bool contiguous(const FrameSequence& seq, std::size_t start, std::size_t length) {
    if (start + length > seq.frames.size()) return false;
    for (std::size_t i = start; i < start + length; ++i) {
        if (!seq.frames[i].usable) return false;
        if (i > start && seq.frames[i].follows_gap) return false;
    }
    return true;
}

std::vector<std::size_t> window_starts(const FrameSequence& seq, int L, int stride) {
    if (L <= 0 || stride <= 0) throw Error(Errc::invalid_argument, "window length and stride must be positive");
    std::vector<std::size_t> out;
    const auto len = static_cast<std::size_t>(L);
    for (std::size_t s = 0; s + len <= seq.frames.size(); s += static_cast<std::size_t>(stride))
        if (contiguous(seq, s, len)) out.push_back(s);
    return out;
}

FeatureWindow window_at(const FrameSequence& seq, std::size_t start, int L) {
    FeatureWindow w;
    w.origin = {seq.source_id, start};
    for (std::size_t i = start; i < start + static_cast<std::size_t>(L); ++i) {
        const auto& f = seq.frames.at(i);
        w.features.push_back(f.features);
        w.labels.push_back(f.label);
        w.provenance.push_back(f.provenance);
    }
    return w;
}

std::vector<FeatureWindow> make_windows(const FrameSequence& seq, int L, int stride) {
    std::vector<FeatureWindow> out;
    for (auto s : window_starts(seq, L, stride)) out.push_back(window_at(seq, s, L));
    return out;
}

void normalize_in_place(FrameSequence& seq, const NormalizationStats& norm) {
    for (auto& f : seq.frames)
        if (f.usable) f.features = norm.apply(f.features);
}

}  // namespace spliceloc::features
