#include "spliceloc/app/dataset.hpp"

#include "spliceloc/error.hpp"

namespace spliceloc::app {

features::NormalizationStats split_statistics(std::span<const features::FrameSequence> seqs, features::Split split) {
    std::vector<features::FrameFeatures> frames;
    for (const auto& s : seqs)
        if (s.split == split)
            for (const auto& f : s.frames)
                if (f.usable) frames.push_back(f.features);
    if (frames.empty()) throw Error(Errc::empty_dataset, "no usable frames in the requested split");
    return features::NormalizationStats::compute(frames);
}

std::vector<features::FeatureWindow> split_windows(std::span<const features::FrameSequence> seqs, features::Split split,
                                                   const features::NormalizationStats& norm, int L) {
    std::vector<features::FeatureWindow> out;
    for (const auto& s : seqs) {
        if (s.split != split) continue;
        auto copy = s;
        features::normalize_in_place(copy, norm);
        auto w = features::make_windows(copy, L);
        out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
    }
    return out;
}

std::vector<metrics::FrameTruth> window_truth(std::span<const features::FeatureWindow> windows) {
    std::vector<metrics::FrameTruth> out;
    for (const auto& w : windows)
        for (std::size_t l = 0; l < w.labels.size(); ++l)
            out.push_back({w.labels[l], w.provenance[l].n_compressions, w.provenance[l].last_type});
    return out;
}

std::vector<std::uint8_t> window_predictions(std::span<const features::FeatureWindow> windows,
                                             const model::ModelParameters& params) {
    std::vector<std::uint8_t> out;
    for (const auto& w : windows) {
        const auto y = model::predict_labels(model::forward(model::to_input(w, params.config), params)).y;
        out.insert(out.end(), y.begin(), y.end());
    }
    return out;
}

metrics::EvalReport evaluate_windows(std::span<const features::FeatureWindow> windows, const model::ModelParameters& params) {
    const auto truth = window_truth(windows);
    return metrics::evaluate(truth, window_predictions(windows, params));
}

features::Split parse_split(const std::string& name) {
    if (name == "train") return features::Split::train;
    if (name == "val") return features::Split::val;
    if (name == "test") return features::Split::test;
    throw Error(Errc::invalid_argument, "unknown split " + name);
}

}  // namespace spliceloc::app
