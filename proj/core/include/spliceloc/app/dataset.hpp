#pragma once

#include <span>
#include <vector>

#include "spliceloc/features/windows.hpp"
#include "spliceloc/metrics/metrics.hpp"
#include "spliceloc/model/network.hpp"

namespace spliceloc::app {

/// Statistics over the usable frames of one split. Throws EmptyDataset.
features::NormalizationStats split_statistics(std::span<const features::FrameSequence> seqs, features::Split split);

/// Normalized windows (stride 8) of every sequence in `split`.
std::vector<features::FeatureWindow> split_windows(std::span<const features::FrameSequence> seqs, features::Split split,
                                                   const features::NormalizationStats& norm, int L = features::default_window);

/// Frame truths of all windows, concatenated in window order.
std::vector<metrics::FrameTruth> window_truth(std::span<const features::FeatureWindow> windows);

/// Eval-mode predictions of all windows, concatenated in window order.
std::vector<std::uint8_t> window_predictions(std::span<const features::FeatureWindow> windows,
                                             const model::ModelParameters& params);

metrics::EvalReport evaluate_windows(std::span<const features::FeatureWindow> windows, const model::ModelParameters& params);

features::Split parse_split(const std::string& name);

}  // namespace spliceloc::app
