#include "spliceloc/forge/plan.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "spliceloc/error.hpp"
#include "spliceloc/forge/wav.hpp"

namespace spliceloc::forge {
namespace {

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

std::string to_string(Encoder e) { return e == Encoder::a ? "encoderA" : "encoderB"; }

std::uint8_t CompressionSpec::type_code() const {
    const auto code = spliceloc::type_code(mode, value);
    if (!code) throw Error(Errc::invalid_argument, "compression setting off the grid: " + std::to_string(value));
    return *code;
}

std::string CompressionSpec::name() const { return type_name(type_code()) + "/" + to_string(encoder); }

std::vector<Segment> segment_source(std::size_t total_samples, std::mt19937_64& rng) {
    const std::size_t total = total_samples / samples_per_frame;
    if (total < min_segment_frames)
        throw Error(Errc::source_too_short, "source holds " + std::to_string(total) + " frames, need at least 80");
    std::vector<Segment> out;
    std::size_t at = 0;
    while (total - at >= min_segment_frames) {
        const std::size_t cap = std::min(max_segment_frames, (total - at) / slice_frames * slice_frames);
        const std::size_t len = slice_frames * uniform(rng, min_segment_frames / slice_frames, cap / slice_frames);
        out.push_back({at, len});
        at += len;
    }
    return out;
}

CompressionSpec draw_spec(std::mt19937_64& rng) {
    const auto code = uniform(rng, 0, n_compression_types - 1);
    CompressionSpec s;
    s.mode = code < 6 ? RateMode::cbr : RateMode::vbr;
    s.value = code < 6 ? cbr_bitrates[code] : vbr_qualities[code - 6];
    s.encoder = uniform(rng, 0, 1) ? Encoder::b : Encoder::a;
    return s;
}

std::vector<SlicePlan> plan_segment(std::size_t frames, std::mt19937_64& rng, bool variable_slices) {
    const CompressionSpec final_spec = draw_spec(rng);
    std::vector<SlicePlan> plans;
    std::size_t at = 0;
    for (int index = 1; at < frames; ++index) {
        SlicePlan p;
        p.slice_index = index;
        p.start = at;
        p.length = variable_slices ? std::min(frames - at, uniform(rng, 10, 80)) : std::min(slice_frames, frames - at);
        int n = 1;
        if (variable_slices) n = static_cast<int>(uniform(rng, 1, 3));
        else if (index % 2 == 1) n = static_cast<int>(uniform(rng, 2, 3));
        for (int k = 0; k + 1 < n; ++k) p.chain.push_back(draw_spec(rng));
        p.chain.push_back(final_spec);
        at += p.length;
        plans.push_back(std::move(p));
    }
    return plans;
}

LabelSequence labels_from_plans(const std::vector<SlicePlan>& plans) {
    LabelSequence y;
    for (const auto& p : plans) y.y.insert(y.y.end(), p.length, p.n_compressions() > 1 ? 1 : 0);
    return y;
}

std::vector<features::FrameProvenance> provenance_from_plans(const std::vector<SlicePlan>& plans) {
    std::vector<features::FrameProvenance> out;
    for (const auto& p : plans)
        out.insert(out.end(), p.length,
                   features::FrameProvenance{static_cast<std::uint8_t>(p.n_compressions()), p.chain.back().type_code(), false});
    return out;
}

std::size_t window_count(std::size_t frames) noexcept {
    return frames < features::default_window ? 0 : (frames - features::default_window) / features::default_stride + 1;
}

std::vector<features::Split> partition(const std::vector<std::size_t>& weights, std::mt19937_64& rng,
                                       SplitFractions f) {
    constexpr std::array<features::Split, 3> splits{features::Split::train, features::Split::val, features::Split::test};
    const std::array<double, 3> target{f.train, f.val, f.test};

    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });

    std::vector<features::Split> out(weights.size(), features::Split::none);
    std::array<double, 3> have{};
    std::array<std::size_t, 3> count{};
    double assigned = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t remaining = order.size() - k;
        const auto empty = static_cast<std::size_t>(std::count(count.begin(), count.end(), std::size_t{0}));
        const double w = static_cast<double>(std::max<std::size_t>(weights[order[k]], 1));
        int pick = -1;
        double best = 0.0;
        for (int s = 0; s < 3; ++s) {
            if (remaining <= empty && count[static_cast<std::size_t>(s)] != 0) continue;
            const double deficit = target[static_cast<std::size_t>(s)] * (assigned + w) - have[static_cast<std::size_t>(s)];
            if (pick < 0 || deficit > best) {
                pick = s;
                best = deficit;
            }
        }
        const auto s = static_cast<std::size_t>(pick);
        out[order[k]] = splits[s];
        have[s] += w;
        ++count[s];
        assigned += w;
    }
    return out;
}

}  // namespace spliceloc::forge
