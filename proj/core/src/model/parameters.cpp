#include "spliceloc/model/parameters.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>

#include "spliceloc/error.hpp"

namespace spliceloc::model {

std::size_t ParameterSet::add(std::string name, std::vector<int> shape) {
    const auto n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                   [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
    tensors_.push_back({std::move(name), std::move(shape), std::vector<double>(n, 0.0)});
    return tensors_.size() - 1;
}

std::size_t ParameterSet::total_elements() const noexcept {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
}

const Tensor* ParameterSet::find(const std::string& name) const noexcept {
    for (const auto& t : tensors_)
        if (t.name == name) return &t;
    return nullptr;
}

ParameterSet ParameterSet::zeros_like() const {
    ParameterSet out = *this;
    out.fill(0.0);
    return out;
}

void ParameterSet::fill(double value) {
    for (auto& t : tensors_) std::fill(t.data.begin(), t.data.end(), value);
}

bool ParameterSet::same_layout(const ParameterSet& other) const noexcept {
    if (count() != other.count()) return false;
    for (std::size_t i = 0; i < count(); ++i)
        if (tensors_[i].name != other.tensors_[i].name || tensors_[i].shape != other.tensors_[i].shape) return false;
    return true;
}

namespace {

struct Layout {
    std::vector<std::pair<std::string, std::vector<int>>> shapes;
    ParamIndex idx;
};

// Single source of truth for names and shapes.
Layout layout_for(const ModelConfig& c) {
    Layout out;
    std::size_t next = 0;
    auto add = [&](std::string name, std::vector<int> shape) {
        out.shapes.emplace_back(std::move(name), std::move(shape));
        return next++;
    };
    auto cnn = [&](const std::string& p, const CnnConfig& cc, CnnIdx& idx) {
        int in = 1, h = cc.rows, w = cc.cols;
        for (int i = 0; i < 6; ++i) {
            const int outc = cc.channels[static_cast<std::size_t>(i / 2)];
            const auto n = p + ".conv" + std::to_string(i + 1);
            idx.conv[i].w = add(n + ".w", {outc, in, 3, 3});
            idx.conv[i].b = add(n + ".b", {outc});
            in = outc;
            if (i % 2 == 1) {
                h = (h + 1) / 2;
                w = (w + 1) / 2;
            }
        }
        idx.fc1.w = add(p + ".fc1.w", {in * h * w, cc.fc});
        idx.fc1.b = add(p + ".fc1.b", {cc.fc});
        idx.fc2.w = add(p + ".fc2.w", {cc.fc, cc.fc});
        idx.fc2.b = add(p + ".fc2.b", {cc.fc});
    };
    cnn("cnn1", c.cnn1, out.idx.cnn1);
    cnn("cnn2", c.cnn2, out.idx.cnn2);
    out.idx.class_tokens = add("class_tokens", {c.L, c.d_model});
    for (int l = 0; l < c.n_layers; ++l) {
        const auto p = "block" + std::to_string(l);
        BlockIdx b;
        b.ln1_gamma = add(p + ".ln1.gamma", {c.d_model});
        b.ln1_beta = add(p + ".ln1.beta", {c.d_model});
        b.u_qkv = add(p + ".u_qkv", {c.n_heads, c.d_model, 3 * c.d_head()});
        b.u_msa = add(p + ".u_msa", {c.d_model, c.d_model});
        b.ln2_gamma = add(p + ".ln2.gamma", {c.d_model});
        b.ln2_beta = add(p + ".ln2.beta", {c.d_model});
        b.ffn1.w = add(p + ".ffn1.w", {c.d_model, c.ffn_hidden});
        b.ffn1.b = add(p + ".ffn1.b", {c.ffn_hidden});
        b.ffn2.w = add(p + ".ffn2.w", {c.ffn_hidden, c.d_model});
        b.ffn2.b = add(p + ".ffn2.b", {c.d_model});
        out.idx.blocks.push_back(b);
    }
    out.idx.lnf_gamma = add("final_ln.gamma", {c.d_model});
    out.idx.lnf_beta = add("final_ln.beta", {c.d_model});
    out.idx.head1.w = add("head.fc1.w", {c.d_model, c.mlp_hidden});
    out.idx.head1.b = add("head.fc1.b", {c.mlp_hidden});
    out.idx.head2.w = add("head.fc2.w", {c.mlp_hidden, 2});
    out.idx.head2.b = add("head.fc2.b", {2});
    return out;
}

bool is_gain(const std::string& name) { return name.ends_with(".gamma"); }
bool is_bias(const std::string& name) { return name.ends_with(".b") || name.ends_with(".beta"); }

}  // namespace

ModelParameters ModelParameters::zeros(const ModelConfig& config) {
    config.validate();
    ModelParameters p;
    p.config = config;
    auto layout = layout_for(config);
    for (auto& [name, shape] : layout.shapes) p.set.add(name, shape);
    p.idx = std::move(layout.idx);
    for (auto& t : p.set)
        if (is_gain(t.name)) std::fill(t.data.begin(), t.data.end(), 1.0);
    return p;
}

ModelParameters ModelParameters::initialize(const ModelConfig& config, std::uint64_t seed) {
    auto p = zeros(config);
    std::mt19937_64 rng(seed);
    for (auto& t : p.set) {
        if (is_gain(t.name) || is_bias(t.name)) continue;
        if (t.name == "class_tokens") {
            std::normal_distribution<double> nd(0.0, 0.02);
            for (auto& v : t.data) v = nd(rng);
            continue;
        }
        // fan-in: everything but the output dimension
        int fan_in = 1;
        if (t.shape.size() == 4) fan_in = t.shape[1] * 9;            // conv [out, in, 3, 3]
        else if (t.shape.size() == 3) fan_in = t.shape[1];           // u_qkv [h, d, 3dh]
        else fan_in = t.shape[0];                                    // dense [in, out]
        const double bound = std::sqrt(3.0 / fan_in);
        std::uniform_real_distribution<double> ud(-bound, bound);
        for (auto& v : t.data) v = ud(rng);
    }
    return p;
}

void ModelParameters::audit() const {
    config.validate();
    const auto layout = layout_for(config);
    if (layout.shapes.size() != set.count())
        throw Error(Errc::shape_mismatch, "expected " + std::to_string(layout.shapes.size()) + " tensors, found " +
                                              std::to_string(set.count()));
    for (std::size_t i = 0; i < set.count(); ++i) {
        const auto& [name, shape] = layout.shapes[i];
        const auto& t = set[i];
        if (t.name != name || t.shape != shape) throw Error(Errc::shape_mismatch, "tensor " + t.name + " does not match " + name);
        const auto n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                       [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
        if (t.data.size() != n) throw Error(Errc::shape_mismatch, "tensor " + t.name + " holds the wrong element count");
    }
}

namespace {

static_assert(std::endian::native == std::endian::little, "weight I/O assumes a little-endian host");

constexpr char weight_magic[8] = {'S', 'P', 'L', 'C', 'W', 'G', 'T', 'S'};
constexpr std::uint32_t weight_version = 1;

void put_u32(std::ofstream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void put_str(std::ofstream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), 4)) throw Error(Errc::format_error, "weight file is truncated");
    return v;
}

std::string get_str(std::ifstream& in) {
    std::string s(get_u32(in), '\0');
    if (s.size() > (1u << 24) || !in.read(s.data(), static_cast<std::streamsize>(s.size())))
        throw Error(Errc::format_error, "weight file is truncated");
    return s;
}

}  // namespace

void ModelParameters::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write " + path);
    out.write(weight_magic, sizeof weight_magic);
    put_u32(out, weight_version);
    put_str(out, config.to_json());
    put_u32(out, static_cast<std::uint32_t>(set.count()));
    for (const auto& t : set) {
        put_str(out, t.name);
        put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        for (int d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
        out.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    }
    if (!out) throw Error(Errc::io_error, "failed writing " + path);
}

ModelParameters ModelParameters::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open " + path);
    char m[8];
    if (!in.read(m, 8) || std::memcmp(m, weight_magic, 8) != 0) throw Error(Errc::format_error, path + " is not a weight file");
    if (get_u32(in) != weight_version) throw Error(Errc::format_error, "unsupported weight file version");
    auto p = zeros(ModelConfig::from_json(get_str(in)));
    if (get_u32(in) != p.set.count()) throw Error(Errc::shape_mismatch, "weight file tensor count does not match its config");
    for (auto& t : p.set) {
        const auto name = get_str(in);
        std::vector<int> shape(get_u32(in));
        for (auto& d : shape) d = static_cast<int>(get_u32(in));
        if (name != t.name || shape != t.shape)
            throw Error(Errc::shape_mismatch, "weight file tensor " + name + " does not match expected " + t.name);
        if (!in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(double))))
            throw Error(Errc::format_error, "weight file is truncated");
    }
    return p;
}

std::string parameter_group(const std::string& n) {
    if (n.starts_with("cnn1.")) return "cnn1";
    if (n.starts_with("cnn2.")) return "cnn2";
    if (n == "class_tokens") return "class_tokens";
    if (n.starts_with("head.")) return "head";
    if (n.find(".u_qkv") != std::string::npos) return "u_qkv";
    if (n.find(".u_msa") != std::string::npos) return "u_msa";
    if (n.find(".ffn") != std::string::npos) return "ffn";
    return "layernorm";
}

}  // namespace spliceloc::model
