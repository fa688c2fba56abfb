#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "spliceloc/features/windows.hpp"
#include "spliceloc/labels.hpp"
#include "spliceloc/model/parameters.hpp"

namespace spliceloc::model {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Mode { eval, train };

/// Network input for one window: one row per frame holding the flattened
/// CNN-1 grid, the flattened CNN-2 grid, and the scalar fields.
struct WindowInput {
    Matrix mdct;      // L x (cnn1.rows * cnn1.cols)
    Matrix scalefac;  // L x (cnn2.rows * cnn2.cols)
    Matrix scalars;   // L x n_scalars
};

/// Converts (already normalized) window features. Throws ShapeMismatch when
/// the config's input shapes differ from the feature layout or the window
/// length differs from config.L.
WindowInput to_input(const features::FeatureWindow& window, const ModelConfig& config);

double gelu(double x) noexcept;
double gelu_derivative(double x) noexcept;

/// Fixed sinusoidal vectors p_0..p_{L-1}.
Matrix positional_encoding(int L, int d_model);

/// One attention head: [q k v] = Z U_qkv, A = softmax(q k^T / sqrt(d_h)),
/// returns A v. `attention` receives A when given.
Matrix self_attention(const Matrix& Z, const Matrix& U_qkv, Matrix* attention = nullptr);

/// Concatenated heads times U_msa; output has the shape of Z.
Matrix multi_head_self_attention(const Matrix& Z, const std::vector<Matrix>& U_qkv, const Matrix& U_msa,
                                 std::vector<Matrix>* attention = nullptr);

/// CNN-1 (`which` = 1) or CNN-2 (`which` = 2) applied to each row of `grids`.
/// Returns one row of length cnn.fc per input row. Dropout follows both FC
/// layers in train mode, with masks drawn from `seed`.
Matrix cnn_forward(const Matrix& grids, const ModelParameters& params, int which, Mode mode = Mode::eval,
                   std::uint64_t seed = 0);

/// Rows [c_1, z'_1, ..., c_L, z'_L] with z'_l = concat(cnn1, cnn2, scalars) + p_l.
Matrix assemble_input(const WindowInput& input, const ModelParameters& params, Mode mode = Mode::eval,
                      std::uint64_t seed = 0);

struct ForwardDiagnostics {
    Matrix assembled;                          // 2L x d_model
    std::vector<std::vector<Matrix>> attention;  // [layer][head], 2L x 2L
    Matrix class_outputs;                      // L x d_model, after the final norm
};

/// Class probabilities, L x 2; row l is the softmax of the head applied to
/// the transformed class token c~_l.
Matrix forward(const WindowInput& input, const ModelParameters& params, Mode mode = Mode::eval,
               std::uint64_t seed = 0, ForwardDiagnostics* diagnostics = nullptr);

/// argmax per row; exact ties go to 0 (single compressed).
LabelSequence predict_labels(const Matrix& probs);

/// Mean cross-entropy over rows, probabilities clamped at 1e-12.
double cross_entropy(const Matrix& probs, const std::vector<std::uint8_t>& labels);

/// Forward + reverse pass for one window. Adds `weight` * d(loss)/d(theta)
/// into `grads` (same layout as params.set) and returns the window loss.
/// Throws NonFiniteLoss when the forward pass produces non-finite values.
double accumulate_gradients(const WindowInput& input, const std::vector<std::uint8_t>& labels,
                            const ModelParameters& params, Mode mode, std::uint64_t seed, double weight,
                            ParameterSet& grads, Matrix* probs_out = nullptr);

}  // namespace spliceloc::model
