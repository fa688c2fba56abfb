#pragma once

#include <array>
#include <string>

namespace spliceloc::model {

struct CnnConfig {
    int rows = 0, cols = 0;           // input grid
    std::array<int, 3> channels{};    // two Conv3 layers per stage, then 2x2 maxpool
    int fc = 0;                       // width of both FC layers (= output length)

    friend bool operator==(const CnnConfig&, const CnnConfig&) = default;
};

struct ModelConfig {
    int d_model = 300;
    int n_layers = 8;
    int n_heads = 15;
    int L = 20;
    int mlp_hidden = 800;
    int ffn_hidden = 1200;
    double dropout = 0.2;
    double ln_eps = 1e-5;
    CnnConfig cnn1{32, 18, {32, 64, 128}, 233};
    CnnConfig cnn2{5, 12, {16, 32, 64}, 49};
    int n_scalars = 18;

    int d_head() const noexcept { return d_model / n_heads; }

    /// Throws ShapeMismatch unless heads divide d_model and
    /// cnn1.fc + cnn2.fc + n_scalars == d_model.
    void validate() const;

    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);

    /// Architecture of the paper: d_model 300, 8 layers, 15 heads.
    static ModelConfig full();
    /// Tiny instance for oracle and gradient checks: d_model 12, 3 heads,
    /// L 4, 2 layers, with small input grids.
    static ModelConfig oracle_reduced();
    /// Test-scale model on real feature shapes: d_model 60, 5 heads, 2 layers.
    static ModelConfig reduced();

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace spliceloc::model
