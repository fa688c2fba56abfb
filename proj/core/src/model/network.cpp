#include "spliceloc/model/network.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "spliceloc/error.hpp"

namespace spliceloc::model {
namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;

constexpr double inv_sqrt2 = 0.70710678118654752440;
constexpr double inv_sqrt_2pi = 0.39894228040143267794;
constexpr double prob_floor = 1e-12;

ConstMap view(const Tensor& t, Eigen::Index rows, Eigen::Index cols) { return {t.data.data(), rows, cols}; }
MutMap view(Tensor& t, Eigen::Index rows, Eigen::Index cols) { return {t.data.data(), rows, cols}; }

Eigen::Map<const Eigen::RowVectorXd> row_view(const Tensor& t) {
    return {t.data.data(), static_cast<Eigen::Index>(t.data.size())};
}
Eigen::Map<Eigen::RowVectorXd> row_view(Tensor& t) { return {t.data.data(), static_cast<Eigen::Index>(t.data.size())}; }

void shape_check(bool ok, const char* what) {
    if (!ok) throw Error(Errc::shape_mismatch, what);
}

// Inverted dropout masks drawn in forward order from one stream per window.
class Dropout {
public:
    Dropout(double p, bool active, std::uint64_t seed) : p_(p), active_(active && p > 0.0), rng_(seed) {}

    // Returns an empty matrix when inactive.
    Matrix mask(Eigen::Index rows, Eigen::Index cols) {
        if (!active_) return {};
        Matrix m(rows, cols);
        const double keep_scale = 1.0 / (1.0 - p_);
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
            m.data()[i] = u < p_ ? 0.0 : keep_scale;
        }
        return m;
    }

private:
    double p_;
    bool active_;
    std::mt19937_64 rng_;
};

void apply_mask(Matrix& x, const Matrix& mask) {
    if (mask.size()) x.array() *= mask.array();
}

Matrix gelu_of(const Matrix& x) { return x.unaryExpr([](double v) { return gelu(v); }); }

Matrix gelu_backward(const Matrix& pre, const Matrix& grad_out) {
    return grad_out.array() * pre.unaryExpr([](double v) { return gelu_derivative(v); }).array();
}

void softmax_rows(Matrix& s) {
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        auto row = s.row(r);
        row.array() -= row.maxCoeff();
        row = row.array().exp().matrix();
        row /= row.sum();
    }
}

// ---- convolution / pooling on channel-major activations -----------------
// An activation of C channels over B images of HxW is a C x (B*H*W) matrix.

struct Grid {
    int B, H, W;
    Eigen::Index pixels() const { return static_cast<Eigen::Index>(B) * H * W; }
};

Matrix im2col(const Matrix& act, const Grid& g) {
    const Eigen::Index C = act.rows();
    Matrix col = Matrix::Zero(C * 9, g.pixels());
    for (Eigen::Index c = 0; c < C; ++c)
        for (int dy = 0; dy < 3; ++dy)
            for (int dx = 0; dx < 3; ++dx) {
                const Eigen::Index r = c * 9 + dy * 3 + dx;
                for (int b = 0; b < g.B; ++b)
                    for (int y = 0; y < g.H; ++y) {
                        const int sy = y + dy - 1;
                        if (sy < 0 || sy >= g.H) continue;
                        for (int x = 0; x < g.W; ++x) {
                            const int sx = x + dx - 1;
                            if (sx < 0 || sx >= g.W) continue;
                            col(r, (static_cast<Eigen::Index>(b) * g.H + y) * g.W + x) =
                                act(c, (static_cast<Eigen::Index>(b) * g.H + sy) * g.W + sx);
                        }
                    }
            }
    return col;
}

Matrix col2im(const Matrix& col, Eigen::Index C, const Grid& g) {
    Matrix act = Matrix::Zero(C, g.pixels());
    for (Eigen::Index c = 0; c < C; ++c)
        for (int dy = 0; dy < 3; ++dy)
            for (int dx = 0; dx < 3; ++dx) {
                const Eigen::Index r = c * 9 + dy * 3 + dx;
                for (int b = 0; b < g.B; ++b)
                    for (int y = 0; y < g.H; ++y) {
                        const int sy = y + dy - 1;
                        if (sy < 0 || sy >= g.H) continue;
                        for (int x = 0; x < g.W; ++x) {
                            const int sx = x + dx - 1;
                            if (sx < 0 || sx >= g.W) continue;
                            act(c, (static_cast<Eigen::Index>(b) * g.H + sy) * g.W + sx) +=
                                col(r, (static_cast<Eigen::Index>(b) * g.H + y) * g.W + x);
                        }
                    }
            }
    return act;
}

// 2x2 / stride 2 max pooling with ceiling: edge windows see fewer inputs.
Matrix maxpool(const Matrix& act, const Grid& g, Grid& out, std::vector<Eigen::Index>& argmax) {
    out = {g.B, (g.H + 1) / 2, (g.W + 1) / 2};
    Matrix res(act.rows(), out.pixels());
    argmax.assign(static_cast<std::size_t>(res.size()), 0);
    for (Eigen::Index c = 0; c < act.rows(); ++c)
        for (int b = 0; b < g.B; ++b)
            for (int y = 0; y < out.H; ++y)
                for (int x = 0; x < out.W; ++x) {
                    double best = -std::numeric_limits<double>::infinity();
                    Eigen::Index at = 0;
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            const int sy = 2 * y + dy, sx = 2 * x + dx;
                            if (sy >= g.H || sx >= g.W) continue;
                            const Eigen::Index i = (static_cast<Eigen::Index>(b) * g.H + sy) * g.W + sx;
                            if (act(c, i) > best) {
                                best = act(c, i);
                                at = i;
                            }
                        }
                    const Eigen::Index o = (static_cast<Eigen::Index>(b) * out.H + y) * out.W + x;
                    res(c, o) = best;
                    argmax[static_cast<std::size_t>(c * res.cols() + o)] = at;
                }
    return res;
}

// ---- CNN -------------------------------------------------------------------

struct CnnTrace {
    Grid grid[3];                          // grid at each stage
    Matrix conv_in[6];                     // activations entering each conv
    Matrix conv_pre[6];                    // conv outputs before GELU
    std::vector<Eigen::Index> argmax[3];
    Grid pooled[3];
    Matrix flat;                           // B x (C*H*W)
    Matrix fc1_pre, fc1_mask, fc2_in, fc2_pre, fc2_mask;
};

Matrix cnn_run(const Matrix& grids, const ModelParameters& p, int which, Dropout& drop, CnnTrace* trace) {
    const CnnConfig& cc = which == 1 ? p.config.cnn1 : p.config.cnn2;
    const CnnIdx& idx = which == 1 ? p.idx.cnn1 : p.idx.cnn2;
    shape_check(grids.cols() == static_cast<Eigen::Index>(cc.rows) * cc.cols, "CNN input grid has the wrong size");

    const int B = static_cast<int>(grids.rows());
    Grid g{B, cc.rows, cc.cols};
    Matrix act = ConstMap(grids.data(), 1, grids.size());
    for (int i = 0; i < 6; ++i) {
        const Tensor& w = p.set[idx.conv[i].w];
        const Eigen::Index cout = w.shape[0], cin = w.shape[1];
        Matrix pre = view(w, cout, cin * 9) * im2col(act, g);
        pre.colwise() += row_view(p.set[idx.conv[i].b]).transpose();
        if (trace) {
            trace->grid[i / 2] = g;
            trace->conv_in[i] = std::move(act);
        }
        act = gelu_of(pre);
        if (trace) trace->conv_pre[i] = std::move(pre);
        if (i % 2 == 1) {
            Grid out;
            std::vector<Eigen::Index> am;
            act = maxpool(act, g, out, am);
            if (trace) {
                trace->argmax[i / 2] = std::move(am);
                trace->pooled[i / 2] = out;
            }
            g = out;
        }
    }

    const Eigen::Index C = act.rows(), hw = static_cast<Eigen::Index>(g.H) * g.W;
    Matrix flat(B, C * hw);
    for (int b = 0; b < B; ++b)
        for (Eigen::Index c = 0; c < C; ++c) flat.row(b).segment(c * hw, hw) = act.row(c).segment(b * hw, hw);

    const Tensor& w1 = p.set[idx.fc1.w];
    Matrix fc1_pre = flat * view(w1, w1.shape[0], w1.shape[1]);
    fc1_pre.rowwise() += row_view(p.set[idx.fc1.b]);
    Matrix h = gelu_of(fc1_pre);
    Matrix m1 = drop.mask(h.rows(), h.cols());
    apply_mask(h, m1);

    const Tensor& w2 = p.set[idx.fc2.w];
    Matrix fc2_pre = h * view(w2, w2.shape[0], w2.shape[1]);
    fc2_pre.rowwise() += row_view(p.set[idx.fc2.b]);
    Matrix out = gelu_of(fc2_pre);
    Matrix m2 = drop.mask(out.rows(), out.cols());
    apply_mask(out, m2);

    if (trace) {
        trace->flat = std::move(flat);
        trace->fc1_pre = std::move(fc1_pre);
        trace->fc1_mask = std::move(m1);
        trace->fc2_in = std::move(h);
        trace->fc2_pre = std::move(fc2_pre);
        trace->fc2_mask = std::move(m2);
    }
    return out;
}

void cnn_backward(const Matrix& d_out_in, const ModelParameters& p, int which, const CnnTrace& t, ParameterSet& g) {
    const CnnIdx& idx = which == 1 ? p.idx.cnn1 : p.idx.cnn2;

    Matrix d = d_out_in;
    apply_mask(d, t.fc2_mask);
    d = gelu_backward(t.fc2_pre, d);
    {
        Tensor& gw = g[idx.fc2.w];
        view(gw, gw.shape[0], gw.shape[1]).noalias() += t.fc2_in.transpose() * d;
        row_view(g[idx.fc2.b]) += d.colwise().sum();
        const Tensor& w = p.set[idx.fc2.w];
        d = (d * view(w, w.shape[0], w.shape[1]).transpose()).eval();
    }
    apply_mask(d, t.fc1_mask);
    d = gelu_backward(t.fc1_pre, d);
    Matrix d_flat;
    {
        Tensor& gw = g[idx.fc1.w];
        view(gw, gw.shape[0], gw.shape[1]).noalias() += t.flat.transpose() * d;
        row_view(g[idx.fc1.b]) += d.colwise().sum();
        const Tensor& w = p.set[idx.fc1.w];
        d_flat = d * view(w, w.shape[0], w.shape[1]).transpose();
    }

    const Grid& last = t.pooled[2];
    const Eigen::Index C = t.conv_pre[5].rows(), hw = static_cast<Eigen::Index>(last.H) * last.W;
    Matrix d_act(C, last.pixels());
    for (int b = 0; b < last.B; ++b)
        for (Eigen::Index c = 0; c < C; ++c) d_act.row(c).segment(b * hw, hw) = d_flat.row(b).segment(c * hw, hw);

    for (int i = 5; i >= 0; --i) {
        const Grid& gi = t.grid[i / 2];
        if (i % 2 == 1) {  // undo pooling
            Matrix up = Matrix::Zero(d_act.rows(), gi.pixels());
            const auto& am = t.argmax[i / 2];
            for (Eigen::Index c = 0; c < d_act.rows(); ++c)
                for (Eigen::Index o = 0; o < d_act.cols(); ++o)
                    up(c, am[static_cast<std::size_t>(c * d_act.cols() + o)]) += d_act(c, o);
            d_act = std::move(up);
        }
        Matrix d_pre = gelu_backward(t.conv_pre[i], d_act);
        const Tensor& w = p.set[idx.conv[i].w];
        const Eigen::Index cout = w.shape[0], cin = w.shape[1];
        const Matrix col = im2col(t.conv_in[i], gi);
        Tensor& gw = g[idx.conv[i].w];
        view(gw, cout, cin * 9).noalias() += d_pre * col.transpose();
        row_view(g[idx.conv[i].b]) += d_pre.rowwise().sum().transpose();
        if (i > 0) d_act = col2im(view(w, cout, cin * 9).transpose() * d_pre, cin, gi);
    }
}

// ---- transformer -------------------------------------------------------

struct NormTrace {
    Matrix xhat;
    Eigen::VectorXd inv_std;
};

Matrix layer_norm(const Matrix& x, const Tensor& gamma, const Tensor& beta, double eps, NormTrace* t) {
    const Eigen::Index n = x.rows();
    Matrix xhat(n, x.cols());
    Eigen::VectorXd inv(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const double mu = x.row(r).mean();
        const double var = (x.row(r).array() - mu).square().mean();
        inv(r) = 1.0 / std::sqrt(var + eps);
        xhat.row(r) = (x.row(r).array() - mu) * inv(r);
    }
    Matrix y = xhat.array().rowwise() * row_view(gamma).array();
    y.rowwise() += row_view(beta);
    if (t) {
        t->xhat = std::move(xhat);
        t->inv_std = std::move(inv);
    }
    return y;
}

Matrix layer_norm_backward(const Matrix& dy, const NormTrace& t, const Tensor& gamma, Tensor& d_gamma, Tensor& d_beta) {
    row_view(d_gamma) += (dy.array() * t.xhat.array()).colwise().sum().matrix();
    row_view(d_beta) += dy.colwise().sum();
    const Matrix dxhat = dy.array().rowwise() * row_view(gamma).array();
    const double D = static_cast<double>(dy.cols());
    Matrix dx(dy.rows(), dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
        const double s1 = dxhat.row(r).sum();
        const double s2 = dxhat.row(r).dot(t.xhat.row(r));
        dx.row(r) = (t.inv_std(r) / D) * (D * dxhat.row(r).array() - s1 - t.xhat.row(r).array() * s2);
    }
    return dx;
}

struct HeadTrace {
    Matrix q, k, v, a;
};

struct BlockTrace {
    NormTrace ln1, ln2;
    Matrix y1, concat, msa_mask, y2, h_pre, h, ffn_mask;
    std::vector<HeadTrace> heads;
};

Matrix head_qkv_weights(const ModelParameters& p, const BlockIdx& b, int head) {
    const auto& c = p.config;
    const Eigen::Index d = c.d_model, w = 3 * c.d_head();
    const Tensor& u = p.set[b.u_qkv];
    return ConstMap(u.data.data() + static_cast<std::ptrdiff_t>(head) * d * w, d, w);
}

Matrix block_forward(const Matrix& x, const ModelParameters& p, const BlockIdx& b, Dropout& drop, BlockTrace* t,
                     std::vector<Matrix>* attention) {
    const auto& c = p.config;
    const int dh = c.d_head();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const Eigen::Index n = x.rows();

    Matrix y1 = layer_norm(x, p.set[b.ln1_gamma], p.set[b.ln1_beta], c.ln_eps, t ? &t->ln1 : nullptr);
    Matrix concat(n, c.d_model);
    if (t) t->heads.resize(static_cast<std::size_t>(c.n_heads));
    for (int h = 0; h < c.n_heads; ++h) {
        const Matrix qkv = y1 * head_qkv_weights(p, b, h);
        Matrix q = qkv.leftCols(dh), k = qkv.middleCols(dh, dh), v = qkv.rightCols(dh);
        Matrix a = (q * k.transpose()) * scale;
        softmax_rows(a);
        concat.middleCols(h * dh, dh) = a * v;
        if (attention) attention->push_back(a);
        if (t) t->heads[static_cast<std::size_t>(h)] = {std::move(q), std::move(k), std::move(v), std::move(a)};
    }
    Matrix msa = concat * view(p.set[b.u_msa], c.d_model, c.d_model);
    Matrix m1 = drop.mask(msa.rows(), msa.cols());
    apply_mask(msa, m1);
    Matrix x1 = x + msa;

    Matrix y2 = layer_norm(x1, p.set[b.ln2_gamma], p.set[b.ln2_beta], c.ln_eps, t ? &t->ln2 : nullptr);
    Matrix h_pre = y2 * view(p.set[b.ffn1.w], c.d_model, c.ffn_hidden);
    h_pre.rowwise() += row_view(p.set[b.ffn1.b]);
    Matrix h = gelu_of(h_pre);
    Matrix f = h * view(p.set[b.ffn2.w], c.ffn_hidden, c.d_model);
    f.rowwise() += row_view(p.set[b.ffn2.b]);
    Matrix m2 = drop.mask(f.rows(), f.cols());
    apply_mask(f, m2);
    Matrix x2 = x1 + f;

    if (t) {
        t->y1 = std::move(y1);
        t->concat = std::move(concat);
        t->msa_mask = std::move(m1);
        t->y2 = std::move(y2);
        t->h_pre = std::move(h_pre);
        t->h = std::move(h);
        t->ffn_mask = std::move(m2);
    }
    return x2;
}

Matrix block_backward(const Matrix& dx2, const ModelParameters& p, const BlockIdx& b, const BlockTrace& t,
                      ParameterSet& g) {
    const auto& c = p.config;
    const int dh = c.d_head();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    // x2 = x1 + drop(ffn(ln2(x1)))
    Matrix df = dx2;
    apply_mask(df, t.ffn_mask);
    view(g[b.ffn2.w], c.ffn_hidden, c.d_model).noalias() += t.h.transpose() * df;
    row_view(g[b.ffn2.b]) += df.colwise().sum();
    Matrix dh_act = df * view(p.set[b.ffn2.w], c.ffn_hidden, c.d_model).transpose();
    Matrix dh_pre = gelu_backward(t.h_pre, dh_act);
    view(g[b.ffn1.w], c.d_model, c.ffn_hidden).noalias() += t.y2.transpose() * dh_pre;
    row_view(g[b.ffn1.b]) += dh_pre.colwise().sum();
    Matrix dy2 = dh_pre * view(p.set[b.ffn1.w], c.d_model, c.ffn_hidden).transpose();
    Matrix dx1 = dx2 + layer_norm_backward(dy2, t.ln2, p.set[b.ln2_gamma], g[b.ln2_gamma], g[b.ln2_beta]);

    // x1 = x + drop(concat U_msa)
    Matrix dmsa = dx1;
    apply_mask(dmsa, t.msa_mask);
    view(g[b.u_msa], c.d_model, c.d_model).noalias() += t.concat.transpose() * dmsa;
    const Matrix dconcat = dmsa * view(p.set[b.u_msa], c.d_model, c.d_model).transpose();

    Matrix dy1 = Matrix::Zero(t.y1.rows(), t.y1.cols());
    Tensor& gu = g[b.u_qkv];
    const Eigen::Index d = c.d_model, w3 = 3 * dh;
    for (int h = 0; h < c.n_heads; ++h) {
        const HeadTrace& ht = t.heads[static_cast<std::size_t>(h)];
        const Matrix dout = dconcat.middleCols(h * dh, dh);
        const Matrix da = dout * ht.v.transpose();
        const Matrix dv = ht.a.transpose() * dout;
        Matrix ds(da.rows(), da.cols());
        for (Eigen::Index r = 0; r < da.rows(); ++r) {
            const double dot = da.row(r).dot(ht.a.row(r));
            ds.row(r) = ht.a.row(r).array() * (da.row(r).array() - dot);
        }
        ds *= scale;
        Matrix dqkv(da.rows(), w3);
        dqkv.leftCols(dh) = ds * ht.k;
        dqkv.middleCols(dh, dh) = ds.transpose() * ht.q;
        dqkv.rightCols(dh) = dv;
        MutMap(gu.data.data() + static_cast<std::ptrdiff_t>(h) * d * w3, d, w3).noalias() += t.y1.transpose() * dqkv;
        dy1.noalias() += dqkv * head_qkv_weights(p, b, h).transpose();
    }
    return dx1 + layer_norm_backward(dy1, t.ln1, p.set[b.ln1_gamma], g[b.ln1_gamma], g[b.ln1_beta]);
}

// ---- whole network ------------------------------------------------------

struct NetTrace {
    CnnTrace cnn1, cnn2;
    std::vector<BlockTrace> blocks;
    NormTrace lnf;
    Matrix class_out, head_pre, head_h;
    Matrix probs;
};

void check_input(const WindowInput& in, const ModelConfig& c) {
    shape_check(in.mdct.rows() == c.L && in.scalefac.rows() == c.L && in.scalars.rows() == c.L,
                "window length does not match the model");
    shape_check(in.scalars.cols() == c.n_scalars, "scalar vector has the wrong length");
}

Matrix assemble(const WindowInput& in, const ModelParameters& p, Dropout& drop, NetTrace* t) {
    const auto& c = p.config;
    check_input(in, c);
    const Matrix z1 = cnn_run(in.mdct, p, 1, drop, t ? &t->cnn1 : nullptr);
    const Matrix z2 = cnn_run(in.scalefac, p, 2, drop, t ? &t->cnn2 : nullptr);
    const Matrix pe = positional_encoding(c.L, c.d_model);
    const ConstMap tokens = view(p.set[p.idx.class_tokens], c.L, c.d_model);
    Matrix z(2 * c.L, c.d_model);
    for (int l = 0; l < c.L; ++l) {
        z.row(2 * l) = tokens.row(l);
        z.row(2 * l + 1) << z1.row(l), z2.row(l), in.scalars.row(l);
        z.row(2 * l + 1) += pe.row(l);
    }
    return z;
}

Matrix run(const WindowInput& in, const ModelParameters& p, Mode mode, std::uint64_t seed, NetTrace* t,
           ForwardDiagnostics* diag) {
    const auto& c = p.config;
    Dropout drop(c.dropout, mode == Mode::train, seed);
    Matrix x = assemble(in, p, drop, t);
    if (diag) {
        diag->assembled = x;
        diag->attention.assign(static_cast<std::size_t>(c.n_layers), {});
    }
    if (t) t->blocks.resize(static_cast<std::size_t>(c.n_layers));
    for (int l = 0; l < c.n_layers; ++l) {
        const auto li = static_cast<std::size_t>(l);
        x = block_forward(x, p, p.idx.blocks[li], drop, t ? &t->blocks[li] : nullptr,
                          diag ? &diag->attention[li] : nullptr);
    }
    const Matrix y = layer_norm(x, p.set[p.idx.lnf_gamma], p.set[p.idx.lnf_beta], c.ln_eps, t ? &t->lnf : nullptr);
    Matrix cls(c.L, c.d_model);
    for (int l = 0; l < c.L; ++l) cls.row(l) = y.row(2 * l);

    Matrix head_pre = cls * view(p.set[p.idx.head1.w], c.d_model, c.mlp_hidden);
    head_pre.rowwise() += row_view(p.set[p.idx.head1.b]);
    Matrix head_h = gelu_of(head_pre);
    Matrix probs = head_h * view(p.set[p.idx.head2.w], c.mlp_hidden, 2);
    probs.rowwise() += row_view(p.set[p.idx.head2.b]);
    softmax_rows(probs);

    if (!probs.allFinite()) throw Error(Errc::non_finite_loss, "forward pass produced non-finite probabilities");
    if (diag) diag->class_outputs = cls;
    if (t) {
        t->class_out = std::move(cls);
        t->head_pre = std::move(head_pre);
        t->head_h = std::move(head_h);
        t->probs = probs;
    }
    return probs;
}

void backward(const Matrix& dlogits, const ModelParameters& p, const NetTrace& t, ParameterSet& g) {
    const auto& c = p.config;
    const auto& idx = p.idx;

    view(g[idx.head2.w], c.mlp_hidden, 2).noalias() += t.head_h.transpose() * dlogits;
    row_view(g[idx.head2.b]) += dlogits.colwise().sum();
    const Matrix dh = gelu_backward(t.head_pre, dlogits * view(p.set[idx.head2.w], c.mlp_hidden, 2).transpose());
    view(g[idx.head1.w], c.d_model, c.mlp_hidden).noalias() += t.class_out.transpose() * dh;
    row_view(g[idx.head1.b]) += dh.colwise().sum();
    const Matrix dcls = dh * view(p.set[idx.head1.w], c.d_model, c.mlp_hidden).transpose();

    Matrix dy = Matrix::Zero(2 * c.L, c.d_model);
    for (int l = 0; l < c.L; ++l) dy.row(2 * l) = dcls.row(l);
    Matrix dx = layer_norm_backward(dy, t.lnf, p.set[idx.lnf_gamma], g[idx.lnf_gamma], g[idx.lnf_beta]);
    for (int l = c.n_layers - 1; l >= 0; --l) {
        const auto li = static_cast<std::size_t>(l);
        dx = block_backward(dx, p, idx.blocks[li], t.blocks[li], g);
    }

    MutMap dtokens = view(g[idx.class_tokens], c.L, c.d_model);
    Matrix dz1(c.L, c.cnn1.fc), dz2(c.L, c.cnn2.fc);
    for (int l = 0; l < c.L; ++l) {
        dtokens.row(l) += dx.row(2 * l);
        dz1.row(l) = dx.row(2 * l + 1).head(c.cnn1.fc);
        dz2.row(l) = dx.row(2 * l + 1).segment(c.cnn1.fc, c.cnn2.fc);
    }
    cnn_backward(dz1, p, 1, t.cnn1, g);
    cnn_backward(dz2, p, 2, t.cnn2, g);
}

}  // namespace

WindowInput to_input(const features::FeatureWindow& window, const ModelConfig& c) {
    shape_check(static_cast<int>(window.features.size()) == c.L, "window length does not match the model");
    shape_check(c.cnn1.rows == features::mdct_rows && c.cnn1.cols == features::mdct_cols &&
                    c.cnn2.rows == features::scalefac_rows && c.cnn2.cols == features::scalefac_cols &&
                    c.n_scalars == features::n_scalars,
                "model input shapes differ from the feature layout");
    WindowInput in{Matrix(c.L, features::mdct_size), Matrix(c.L, features::scalefac_size),
                   Matrix(c.L, features::n_scalars)};
    for (int l = 0; l < c.L; ++l) {
        const auto& f = window.features[static_cast<std::size_t>(l)];
        for (int i = 0; i < features::mdct_size; ++i) in.mdct(l, i) = f.mdct[static_cast<std::size_t>(i)];
        for (int i = 0; i < features::scalefac_size; ++i) in.scalefac(l, i) = f.scalefac[static_cast<std::size_t>(i)];
        for (int i = 0; i < features::n_scalars; ++i) in.scalars(l, i) = f.scalars[static_cast<std::size_t>(i)];
    }
    return in;
}

double gelu(double x) noexcept { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); }

double gelu_derivative(double x) noexcept {
    return 0.5 * (1.0 + std::erf(x * inv_sqrt2)) + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

Matrix positional_encoding(int L, int d_model) {
    Matrix pe(L, d_model);
    for (int pos = 0; pos < L; ++pos)
        for (int i = 0; i < d_model; ++i) {
            const double angle = pos / std::pow(10000.0, 2.0 * (i / 2) / d_model);
            pe(pos, i) = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
        }
    return pe;
}

Matrix self_attention(const Matrix& Z, const Matrix& U_qkv, Matrix* attention) {
    shape_check(U_qkv.rows() == Z.cols() && U_qkv.cols() % 3 == 0, "U_qkv must be d_model x 3*d_h");
    const Eigen::Index dh = U_qkv.cols() / 3;
    const Matrix qkv = Z * U_qkv;
    Matrix a = (qkv.leftCols(dh) * qkv.middleCols(dh, dh).transpose()) / std::sqrt(static_cast<double>(dh));
    softmax_rows(a);
    Matrix out = a * qkv.rightCols(dh);
    if (attention) *attention = std::move(a);
    return out;
}

Matrix multi_head_self_attention(const Matrix& Z, const std::vector<Matrix>& U_qkv, const Matrix& U_msa,
                                 std::vector<Matrix>* attention) {
    shape_check(!U_qkv.empty(), "at least one head is required");
    const Eigen::Index dh = U_qkv.front().cols() / 3;
    shape_check(dh * static_cast<Eigen::Index>(U_qkv.size()) == Z.cols(), "heads * d_h must equal d_model");
    shape_check(U_msa.rows() == Z.cols() && U_msa.cols() == Z.cols(), "U_msa must be d_model x d_model");
    Matrix concat(Z.rows(), Z.cols());
    if (attention) attention->clear();
    for (std::size_t h = 0; h < U_qkv.size(); ++h) {
        shape_check(U_qkv[h].cols() == 3 * dh, "all heads must share d_h");
        Matrix a;
        concat.middleCols(static_cast<Eigen::Index>(h) * dh, dh) = self_attention(Z, U_qkv[h], &a);
        if (attention) attention->push_back(std::move(a));
    }
    return concat * U_msa;
}

Matrix cnn_forward(const Matrix& grids, const ModelParameters& params, int which, Mode mode, std::uint64_t seed) {
    if (which != 1 && which != 2) throw Error(Errc::invalid_argument, "CNN index must be 1 or 2");
    Dropout drop(params.config.dropout, mode == Mode::train, seed);
    return cnn_run(grids, params, which, drop, nullptr);
}

Matrix assemble_input(const WindowInput& input, const ModelParameters& params, Mode mode, std::uint64_t seed) {
    Dropout drop(params.config.dropout, mode == Mode::train, seed);
    return assemble(input, params, drop, nullptr);
}

Matrix forward(const WindowInput& input, const ModelParameters& params, Mode mode, std::uint64_t seed,
               ForwardDiagnostics* diagnostics) {
    return run(input, params, mode, seed, nullptr, diagnostics);
}

LabelSequence predict_labels(const Matrix& probs) {
    shape_check(probs.cols() == 2, "probabilities must have two columns");
    LabelSequence out;
    out.y.resize(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index r = 0; r < probs.rows(); ++r) out.y[static_cast<std::size_t>(r)] = probs(r, 1) > probs(r, 0) ? 1 : 0;
    return out;
}

double cross_entropy(const Matrix& probs, const std::vector<std::uint8_t>& labels) {
    shape_check(probs.cols() == 2 && static_cast<std::size_t>(probs.rows()) == labels.size(),
                "probabilities and labels disagree in shape");
    double sum = 0.0;
    for (std::size_t l = 0; l < labels.size(); ++l)
        sum -= std::log(std::max(probs(static_cast<Eigen::Index>(l), labels[l] ? 1 : 0), prob_floor));
    return sum / static_cast<double>(labels.size());
}

double accumulate_gradients(const WindowInput& input, const std::vector<std::uint8_t>& labels,
                            const ModelParameters& params, Mode mode, std::uint64_t seed, double weight,
                            ParameterSet& grads, Matrix* probs_out) {
    shape_check(grads.same_layout(params.set), "gradient set does not match the parameters");
    NetTrace trace;
    const Matrix probs = run(input, params, mode, seed, &trace, nullptr);
    const double loss = cross_entropy(probs, labels);
    if (!std::isfinite(loss)) throw Error(Errc::non_finite_loss, "loss is not finite");

    // d/dlogits of mean_l -log p_l[y_l]; zero where the clamp is active
    Matrix dlogits = probs;
    const double per_row = weight / static_cast<double>(labels.size());
    for (std::size_t l = 0; l < labels.size(); ++l) {
        const auto r = static_cast<Eigen::Index>(l);
        const int y = labels[l] ? 1 : 0;
        if (probs(r, y) < prob_floor) {
            dlogits.row(r).setZero();
            continue;
        }
        dlogits(r, y) -= 1.0;
        dlogits.row(r) *= per_row;
    }
    backward(dlogits, params, trace, grads);
    if (probs_out) *probs_out = probs;
    return loss;
}

}  // namespace spliceloc::model
