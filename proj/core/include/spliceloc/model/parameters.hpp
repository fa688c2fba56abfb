#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "spliceloc/model/config.hpp"

namespace spliceloc::model {

struct Tensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> data;

    std::size_t size() const noexcept { return data.size(); }
    friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Flat, ordered list of named tensors. Gradients and Adam moments use a
/// set of identical layout.
class ParameterSet {
public:
    std::size_t add(std::string name, std::vector<int> shape);

    Tensor& operator[](std::size_t i) { return tensors_[i]; }
    const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
    std::size_t count() const noexcept { return tensors_.size(); }
    std::size_t total_elements() const noexcept;
    const Tensor* find(const std::string& name) const noexcept;

    ParameterSet zeros_like() const;
    void fill(double value);
    bool same_layout(const ParameterSet& other) const noexcept;

    auto begin() { return tensors_.begin(); }
    auto end() { return tensors_.end(); }
    auto begin() const { return tensors_.begin(); }
    auto end() const { return tensors_.end(); }

    friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

private:
    std::vector<Tensor> tensors_;
};

struct LinearIdx {
    std::size_t w = 0, b = 0;
};

struct CnnIdx {
    LinearIdx conv[6];
    LinearIdx fc1, fc2;
};

struct BlockIdx {
    std::size_t ln1_gamma = 0, ln1_beta = 0;
    std::size_t u_qkv = 0;  // [heads, d_model, 3 * d_head]
    std::size_t u_msa = 0;  // [d_model, d_model]
    std::size_t ln2_gamma = 0, ln2_beta = 0;
    LinearIdx ffn1, ffn2;
};

struct ParamIndex {
    CnnIdx cnn1, cnn2;
    std::size_t class_tokens = 0;  // [L, d_model]
    std::vector<BlockIdx> blocks;
    std::size_t lnf_gamma = 0, lnf_beta = 0;
    LinearIdx head1, head2;
};

/// All trainable weights of the network plus the layout that locates them.
struct ModelParameters {
    ModelConfig config;
    ParameterSet set;
    ParamIndex idx;

    /// Zero-valued parameters (LayerNorm gains 1) laid out for `config`.
    static ModelParameters zeros(const ModelConfig& config);
    /// Fan-in scaled uniform weights, zero biases, unit LayerNorm gains and
    /// N(0, 0.02^2) class tokens.
    static ModelParameters initialize(const ModelConfig& config, std::uint64_t seed);

    /// Checks every tensor shape against what `config` implies. Throws
    /// ShapeMismatch naming the first offending tensor.
    void audit() const;

    /// Versioned binary weight file: config and every tensor with its shape.
    void save(const std::string& path) const;
    static ModelParameters load(const std::string& path);
};

/// Parameter group of a tensor name, e.g. "cnn1", "class_tokens", "u_qkv",
/// "u_msa", "ffn", "layernorm", "head".
std::string parameter_group(const std::string& tensor_name);

}  // namespace spliceloc::model
