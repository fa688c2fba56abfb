#include "spliceloc/metrics/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "spliceloc/compression_type.hpp"
#include "spliceloc/error.hpp"

namespace spliceloc::metrics {
namespace {

void same_length(std::size_t a, std::size_t b) {
    if (a != b) throw Error(Errc::length_mismatch, "label vectors differ in length (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
}

double pct(std::size_t num, std::size_t den) { return 100.0 * static_cast<double>(num) / static_cast<double>(den); }

}  // namespace

Confusion confusion(Labels y, Labels y_hat) {
    same_length(y.size(), y_hat.size());
    Confusion c;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const bool t = y[i] != 0, p = y_hat[i] != 0;
        if (t && p) ++c.tp;
        else if (!t && p) ++c.fp;
        else if (t) ++c.fn;
        else ++c.tn;
    }
    return c;
}

Score jaccard(Labels y, Labels y_hat) {
    const auto c = confusion(y, y_hat);
    const std::size_t uni = c.tp + c.fp + c.fn;
    if (uni == 0) return {100.0, true};
    return {pct(c.tp, uni), false};
}

Score f1(Labels y, Labels y_hat) {
    const auto c = confusion(y, y_hat);
    // 2PR/(P+R) = 2TP / (2TP + FP + FN) whenever P and R are defined
    if (c.tp == 0) return {0.0, true};
    return {pct(2 * c.tp, 2 * c.tp + c.fp + c.fn), false};
}

Score balanced_accuracy(Labels y, Labels y_hat) {
    const auto c = confusion(y, y_hat);
    const std::size_t pos = c.tp + c.fn, neg = c.tn + c.fp;
    if (pos == 0 && neg == 0) return {0.0, true};
    if (pos == 0) return {pct(c.tn, neg), true};
    if (neg == 0) return {pct(c.tp, pos), true};
    return {(pct(c.tp, pos) + pct(c.tn, neg)) / 2.0, false};
}

RecallTables grouped_recall(std::span<const FrameTruth> truth, Labels y_hat) {
    same_length(truth.size(), y_hat.size());
    RecallTables t;
    for (int code = 0; code < n_compression_types; ++code)
        t.by_last_type.push_back({type_name(static_cast<std::uint8_t>(code))});
    t.by_count = {{"Single"}, {"Double"}, {"Triple"}, {"Overall"}};

    auto hit = [](GroupRecall& g, bool correct) {
        ++g.frames;
        g.correct += correct ? 1 : 0;
        g.empty = false;
    };
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto& f = truth[i];
        const bool predicted_multi = y_hat[i] != 0;
        if (f.n_compressions == 1) {
            hit(t.by_count[0], !predicted_multi);
        } else if (f.n_compressions == 2 || f.n_compressions == 3) {
            hit(t.by_count[f.n_compressions == 2 ? 1 : 2], predicted_multi);
            hit(t.by_count[3], predicted_multi);
            if (f.last_type < n_compression_types) hit(t.by_last_type[f.last_type], predicted_multi);
        }
    }
    return t;
}

EvalReport evaluate(std::span<const FrameTruth> truth, Labels y_hat) {
    same_length(truth.size(), y_hat.size());
    std::vector<std::uint8_t> y(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) y[i] = truth[i].label;
    EvalReport r;
    r.jaccard = jaccard(y, y_hat);
    r.f1 = f1(y, y_hat);
    r.balanced_accuracy = balanced_accuracy(y, y_hat);
    r.confusion = confusion(y, y_hat);
    r.recall = grouped_recall(truth, y_hat);
    return r;
}

double round2(double v) noexcept { return std::round(v * 100.0) / 100.0; }

std::string EvalReport::to_json() const {
    using nlohmann::json;
    auto score = [](const Score& s) { return json{{"value", round2(s.value)}, {"degenerate", s.degenerate}}; };
    auto groups = [](const std::vector<GroupRecall>& gs) {
        json a = json::array();
        for (const auto& g : gs)
            a.push_back({{"group", g.group}, {"frames", g.frames}, {"correct", g.correct},
                         {"recall", g.empty ? json(nullptr) : json(round2(g.recall()))}, {"empty", g.empty}});
        return a;
    };
    json j = {{"schema", "spliceloc.eval/1"},
              {"aggregation", "frames of all windows concatenated"},
              {"jaccard", score(jaccard)},
              {"f1", score(f1)},
              {"balanced_accuracy", score(balanced_accuracy)},
              {"confusion", {{"tp", confusion.tp}, {"fp", confusion.fp}, {"tn", confusion.tn}, {"fn", confusion.fn}}},
              {"recall_by_last_type", groups(recall.by_last_type)},
              {"recall_by_count", groups(recall.by_count)}};
    return j.dump(2);
}

std::string EvalReport::to_tables() const {
    std::ostringstream os;
    char buf[64];
    auto cell = [&](double v) {
        std::snprintf(buf, sizeof buf, "%8.2f", v);
        return std::string(buf);
    };
    auto group_cell = [&](const GroupRecall& g) { return g.empty ? std::string("       -") : cell(g.recall()); };

    os << "Scores (frames of all windows concatenated)\n";
    os << "            Jaccard      F1  BalAcc\n";
    os << "Model      " << cell(jaccard.value) << cell(f1.value) << cell(balanced_accuracy.value) << "\n\n";

    os << "Recall by last compression type\n           ";
    for (const auto& g : recall.by_last_type) {
        std::snprintf(buf, sizeof buf, "%8s", g.group.c_str());
        os << buf;
    }
    os << "\nModel      ";
    for (const auto& g : recall.by_last_type) os << group_cell(g);
    os << "\n\nRecall by number of compressions\n";
    os << "             Single  Double  Triple Overall\nModel      ";
    for (const auto& g : recall.by_count) os << group_cell(g);
    os << '\n';
    return os.str();
}

}  // namespace spliceloc::metrics
