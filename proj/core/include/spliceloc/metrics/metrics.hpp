#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace spliceloc::metrics {

using Labels = std::span<const std::uint8_t>;

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// A percentage in [0, 100]. `degenerate` marks a conventional value taken
/// because a denominator was zero.
struct Score {
    double value = 0.0;
    bool degenerate = false;
};

/// Class 1 is positive. Throws LengthMismatch.
Confusion confusion(Labels y, Labels y_hat);

/// |I(y) ∩ I(ŷ)| / |I(y) ∪ I(ŷ)| x 100; both index sets empty gives 100.
Score jaccard(Labels y, Labels y_hat);
/// 2PR / (P + R) x 100; 0 (degenerate) when P or R is undefined or both are 0.
Score f1(Labels y, Labels y_hat);
/// (TPR + TNR) / 2 x 100. With one class absent from y, the recall of the
/// present class is returned, flagged degenerate.
Score balanced_accuracy(Labels y, Labels y_hat);

/// Frame-level truth with its compression history.
struct FrameTruth {
    std::uint8_t label = 0;
    std::uint8_t n_compressions = 0;  // 1, 2, 3; 0 unknown
    std::uint8_t last_type = 0xFF;    // compression type code, 0xFF unknown
};

struct GroupRecall {
    std::string group;
    std::size_t frames = 0;
    std::size_t correct = 0;
    bool empty = true;

    double recall() const noexcept { return frames ? 100.0 * static_cast<double>(correct) / static_cast<double>(frames) : 0.0; }
};

struct RecallTables {
    /// Recall of class 1 on multiply-compressed frames, per last
    /// compression type; one column per type in grid order.
    std::vector<GroupRecall> by_last_type;
    /// Single (recall of class 0 on single-compressed frames), Double,
    /// Triple, and Overall (pooled recall of class 1 over Double + Triple).
    std::vector<GroupRecall> by_count;
};

/// Throws LengthMismatch.
RecallTables grouped_recall(std::span<const FrameTruth> truth, Labels y_hat);

/// Scores over the concatenation of all evaluated frames.
struct EvalReport {
    Score jaccard, f1, balanced_accuracy;
    Confusion confusion;
    RecallTables recall;

    std::string to_json() const;
    /// Plain-text tables laid out like the paper's score, last-type and
    /// compression-count tables.
    std::string to_tables() const;
};

EvalReport evaluate(std::span<const FrameTruth> truth, Labels y_hat);

/// Two-decimal rounding used for reporting.
double round2(double v) noexcept;

}  // namespace spliceloc::metrics
