#include "forward_oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spliceloc::testing {
namespace {

using Vec = std::vector<double>;
using model::ModelParameters;

const model::Tensor& T(const ModelParameters& p, const std::string& name) {
    const auto* t = p.set.find(name);
    if (!t) throw std::runtime_error("oracle: no tensor " + name);
    return *t;
}

double gelu(double x) { return x * 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

Grid2 matmul(const Grid2& a, const Grid2& b) {
    Grid2 out(a.size(), Vec(b[0].size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            for (std::size_t j = 0; j < b[0].size(); ++j) out[i][j] += a[i][k] * b[k][j];
    return out;
}

Grid2 dense(const model::Tensor& t) {  // [rows, cols] row-major
    Grid2 out(static_cast<std::size_t>(t.shape[0]), Vec(static_cast<std::size_t>(t.shape[1])));
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = 0; j < out[i].size(); ++j) out[i][j] = t.data[i * out[i].size() + j];
    return out;
}

Vec linear(const Vec& x, const model::Tensor& w, const model::Tensor& b) {
    const std::size_t in = static_cast<std::size_t>(w.shape[0]), out = static_cast<std::size_t>(w.shape[1]);
    Vec y(out);
    for (std::size_t j = 0; j < out; ++j) {
        double s = b.data[j];
        for (std::size_t i = 0; i < in; ++i) s += x[i] * w.data[i * out + j];
        y[j] = s;
    }
    return y;
}

using Image = std::vector<Grid2>;  // [channel][y][x]

Image conv3_gelu(const Image& in, const model::Tensor& w, const model::Tensor& b) {
    const int cout = w.shape[0], cin = w.shape[1];
    const int H = static_cast<int>(in[0].size()), W = static_cast<int>(in[0][0].size());
    Image out(static_cast<std::size_t>(cout), Grid2(static_cast<std::size_t>(H), Vec(static_cast<std::size_t>(W))));
    for (int o = 0; o < cout; ++o)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double s = b.data[static_cast<std::size_t>(o)];
                for (int i = 0; i < cin; ++i)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const int yy = y + ky - 1, xx = x + kx - 1;
                            if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
                            s += w.data[static_cast<std::size_t>(((o * cin + i) * 3 + ky) * 3 + kx)] *
                                 in[static_cast<std::size_t>(i)][static_cast<std::size_t>(yy)][static_cast<std::size_t>(xx)];
                        }
                out[static_cast<std::size_t>(o)][static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] = gelu(s);
            }
    return out;
}

Image pool(const Image& in) {
    const std::size_t H = in[0].size(), W = in[0][0].size();
    const std::size_t h = (H + 1) / 2, w = (W + 1) / 2;
    Image out(in.size(), Grid2(h, Vec(w)));
    for (std::size_t c = 0; c < in.size(); ++c)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                double m = -1e300;
                for (std::size_t yy = 2 * y; yy < std::min(H, 2 * y + 2); ++yy)
                    for (std::size_t xx = 2 * x; xx < std::min(W, 2 * x + 2); ++xx) m = std::max(m, in[c][yy][xx]);
                out[c][y][x] = m;
            }
    return out;
}

Vec cnn(const Vec& flat_grid, int rows, int cols, const ModelParameters& p, const std::string& name) {
    Image img(1, Grid2(static_cast<std::size_t>(rows), Vec(static_cast<std::size_t>(cols))));
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x)
            img[0][static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] = flat_grid[static_cast<std::size_t>(y * cols + x)];
    for (int i = 1; i <= 6; ++i) {
        const auto conv = name + ".conv" + std::to_string(i);
        img = conv3_gelu(img, T(p, conv + ".w"), T(p, conv + ".b"));
        if (i % 2 == 0) img = pool(img);
    }
    Vec flat;
    for (const auto& ch : img)
        for (const auto& row : ch) flat.insert(flat.end(), row.begin(), row.end());
    Vec h = linear(flat, T(p, name + ".fc1.w"), T(p, name + ".fc1.b"));
    for (auto& v : h) v = gelu(v);
    Vec o = linear(h, T(p, name + ".fc2.w"), T(p, name + ".fc2.b"));
    for (auto& v : o) v = gelu(v);
    return o;
}

Grid2 layer_norm(const Grid2& x, const model::Tensor& g, const model::Tensor& b, double eps) {
    Grid2 out = x;
    for (std::size_t r = 0; r < x.size(); ++r) {
        double mean = 0.0, var = 0.0;
        for (double v : x[r]) mean += v;
        mean /= static_cast<double>(x[r].size());
        for (double v : x[r]) var += (v - mean) * (v - mean);
        var /= static_cast<double>(x[r].size());
        for (std::size_t j = 0; j < x[r].size(); ++j)
            out[r][j] = (x[r][j] - mean) / std::sqrt(var + eps) * g.data[j] + b.data[j];
    }
    return out;
}

}  // namespace

Grid2 to_grid(const model::Matrix& m) {
    Grid2 out(static_cast<std::size_t>(m.rows()), Vec(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    return out;
}

Grid2 oracle_attention(const Grid2& Z, const Grid2& U) {
    const std::size_t n = Z.size(), dh = U[0].size() / 3;
    const Grid2 P = matmul(Z, U);  // [q | k | v]
    Grid2 out(n, Vec(dh, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        Vec s(n);
        double mx = -1e300;
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t t = 0; t < dh; ++t) dot += P[i][t] * P[j][dh + t];
            s[j] = dot / std::sqrt(static_cast<double>(dh));
            mx = std::max(mx, s[j]);
        }
        double z = 0.0;
        for (auto& v : s) z += (v = std::exp(v - mx));
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t t = 0; t < dh; ++t) out[i][t] += s[j] / z * P[j][2 * dh + t];
    }
    return out;
}

Grid2 oracle_forward(const model::WindowInput& input, const ModelParameters& p) {
    const auto& c = p.config;
    const std::size_t L = static_cast<std::size_t>(c.L), d = static_cast<std::size_t>(c.d_model);
    const std::size_t heads = static_cast<std::size_t>(c.n_heads), dh = d / heads;

    // Eq. 5: interleave class tokens with z_l + p_l
    const auto& tokens = T(p, "class_tokens");
    Grid2 z(2 * L, Vec(d));
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t j = 0; j < d; ++j) z[2 * l][j] = tokens.data[l * d + j];
        Vec m(static_cast<std::size_t>(input.mdct.cols())), s(static_cast<std::size_t>(input.scalefac.cols()));
        for (std::size_t j = 0; j < m.size(); ++j) m[j] = input.mdct(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j));
        for (std::size_t j = 0; j < s.size(); ++j) s[j] = input.scalefac(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j));
        Vec row = cnn(m, c.cnn1.rows, c.cnn1.cols, p, "cnn1");
        const Vec r2 = cnn(s, c.cnn2.rows, c.cnn2.cols, p, "cnn2");
        row.insert(row.end(), r2.begin(), r2.end());
        for (Eigen::Index j = 0; j < input.scalars.cols(); ++j) row.push_back(input.scalars(static_cast<Eigen::Index>(l), j));
        for (std::size_t j = 0; j < d; ++j) {
            const double freq = std::pow(10000.0, static_cast<double>(2 * (j / 2)) / static_cast<double>(d));
            const double pe = j % 2 == 0 ? std::sin(static_cast<double>(l) / freq) : std::cos(static_cast<double>(l) / freq);
            z[2 * l + 1][j] = row[j] + pe;
        }
    }

    for (int layer = 0; layer < c.n_layers; ++layer) {
        const std::string b = "block" + std::to_string(layer);
        // Eqs. 1-4 inside a pre-norm residual block
        const Grid2 y = layer_norm(z, T(p, b + ".ln1.gamma"), T(p, b + ".ln1.beta"), c.ln_eps);
        const auto& uqkv = T(p, b + ".u_qkv");
        Grid2 concat(2 * L, Vec(d, 0.0));
        for (std::size_t h = 0; h < heads; ++h) {
            Grid2 U(d, Vec(3 * dh));
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < 3 * dh; ++j) U[i][j] = uqkv.data[(h * d + i) * 3 * dh + j];
            const Grid2 sa = oracle_attention(y, U);
            for (std::size_t r = 0; r < 2 * L; ++r)
                for (std::size_t j = 0; j < dh; ++j) concat[r][h * dh + j] = sa[r][j];
        }
        const Grid2 msa = matmul(concat, dense(T(p, b + ".u_msa")));
        for (std::size_t r = 0; r < 2 * L; ++r)
            for (std::size_t j = 0; j < d; ++j) z[r][j] += msa[r][j];

        const Grid2 y2 = layer_norm(z, T(p, b + ".ln2.gamma"), T(p, b + ".ln2.beta"), c.ln_eps);
        for (std::size_t r = 0; r < 2 * L; ++r) {
            Vec hdn = linear(y2[r], T(p, b + ".ffn1.w"), T(p, b + ".ffn1.b"));
            for (auto& v : hdn) v = gelu(v);
            const Vec f = linear(hdn, T(p, b + ".ffn2.w"), T(p, b + ".ffn2.b"));
            for (std::size_t j = 0; j < d; ++j) z[r][j] += f[j];
        }
    }
    const Grid2 fin = layer_norm(z, T(p, "final_ln.gamma"), T(p, "final_ln.beta"), c.ln_eps);

    // Eq. 6: shared MLP on each transformed class token
    Grid2 probs(L, Vec(2));
    for (std::size_t l = 0; l < L; ++l) {
        Vec h = linear(fin[2 * l], T(p, "head.fc1.w"), T(p, "head.fc1.b"));
        for (auto& v : h) v = gelu(v);
        const Vec o = linear(h, T(p, "head.fc2.w"), T(p, "head.fc2.b"));
        const double mx = std::max(o[0], o[1]);
        const double e0 = std::exp(o[0] - mx), e1 = std::exp(o[1] - mx);
        probs[l] = {e0 / (e0 + e1), e1 / (e0 + e1)};
    }
    return probs;
}

}  // namespace spliceloc::testing
