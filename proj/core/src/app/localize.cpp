#include "spliceloc/app/localize.hpp"

#include <cmath>

#include "json.hpp"
#include "spliceloc/error.hpp"

namespace spliceloc::app {

double frame_time(std::size_t frame_index) noexcept { return static_cast<double>(frame_index) * 1152.0 / 44100.0; }

std::vector<std::size_t> window_cover(std::size_t n, int L, int stride) {
    const auto len = static_cast<std::size_t>(L);
    std::vector<std::size_t> out;
    if (n < len) return out;
    for (std::size_t s = 0; s + len <= n; s += static_cast<std::size_t>(stride)) out.push_back(s);
    if (out.back() + len < n) out.push_back(n - len);
    return out;
}

LocalizationResult localize(const std::vector<mp3::ParsedFrame>& frames, const model::ModelParameters& params,
                            const features::NormalizationStats& norm, std::string file) {
    const auto& c = params.config;
    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < frames.size(); ++i)
        if (frames[i].usable()) usable.push_back(i);
    if (usable.size() < static_cast<std::size_t>(c.L))
        throw Error(Errc::file_too_short, std::to_string(usable.size()) + " usable frames, need " + std::to_string(c.L));

    std::vector<features::FrameFeatures> feats;
    feats.reserve(usable.size());
    for (auto i : usable) feats.push_back(features::build_frame_features(*frames[i].record, norm));

    std::vector<double> sum(usable.size(), 0.0);
    std::vector<int> hits(usable.size(), 0);
    for (auto start : window_cover(usable.size(), c.L)) {
        features::FeatureWindow w;
        w.features.assign(feats.begin() + static_cast<std::ptrdiff_t>(start),
                          feats.begin() + static_cast<std::ptrdiff_t>(start) + c.L);
        const auto probs = model::forward(model::to_input(w, c), params);
        for (int l = 0; l < c.L; ++l) {
            sum[start + static_cast<std::size_t>(l)] += probs(l, 1);
            ++hits[start + static_cast<std::size_t>(l)];
        }
    }

    LocalizationResult r;
    r.file = std::move(file);
    r.frames.resize(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) r.frames[i].frame_index = i;
    for (std::size_t k = 0; k < usable.size(); ++k) {
        auto& d = r.frames[usable[k]];
        d.usable = true;
        d.probability = sum[k] / hits[k];
        d.label = d.probability > 0.5 ? 1 : 0;
    }
    std::optional<Region> open;
    for (const auto& d : r.frames) {
        if (!d.label) continue;  // unusable frames neither extend nor break a run
        if (*d.label == 1) {
            if (!open) open = Region{d.frame_index, d.frame_index};
            open->last_frame = d.frame_index;
        } else if (open) {
            r.regions.push_back(*open);
            open.reset();
        }
    }
    if (open) r.regions.push_back(*open);
    return r;
}

std::string LocalizationResult::to_json() const {
    using nlohmann::json;
    auto t3 = [](double t) { return std::round(t * 1000.0) / 1000.0; };
    json fr = json::array();
    for (const auto& d : frames) {
        json j = {{"frame_index", d.frame_index}, {"time", t3(frame_time(d.frame_index))}, {"usable", d.usable}};
        j["label"] = d.label ? json(*d.label) : json(nullptr);
        j["probability"] = d.label ? json(d.probability) : json(nullptr);
        fr.push_back(j);
    }
    json rg = json::array();
    for (const auto& g : regions)
        rg.push_back({{"first_frame", g.first_frame}, {"last_frame", g.last_frame},
                      {"start_time", t3(frame_time(g.first_frame))}, {"end_time", t3(frame_time(g.last_frame + 1))}});
    return json{{"schema", "spliceloc.localization/1"}, {"file", file}, {"frames", fr}, {"regions", rg}}.dump(2);
}

}  // namespace spliceloc::app
