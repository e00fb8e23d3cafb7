#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tryon/common.hpp"
#include "tryon/rng.hpp"

// Minimal neural-net building blocks with hand-written backward passes.
// Activations are (pixels x channels) row-major matrices so convolutions
// (via im2col), attention and linear layers all reduce to GEMMs.
namespace tryon::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
struct ParamStore {
    struct Entry {
        std::string name;
        Mat<T> w;
        Mat<T> g;
    };
    std::vector<Entry> entries;

    int add(const std::string& name, int rows, int cols) {
        Entry e;
        e.name = name;
        e.w = Mat<T>::Zero(rows, cols);
        e.g = Mat<T>::Zero(rows, cols);
        entries.push_back(std::move(e));
        return static_cast<int>(entries.size()) - 1;
    }

    Mat<T>& w(int i) { return entries[static_cast<size_t>(i)].w; }
    const Mat<T>& w(int i) const { return entries[static_cast<size_t>(i)].w; }
    Mat<T>& g(int i) { return entries[static_cast<size_t>(i)].g; }

    void zero_grad() {
        for (auto& e : entries) e.g.setZero();
    }

    size_t param_count() const {
        size_t n = 0;
        for (const auto& e : entries) n += static_cast<size_t>(e.w.size());
        return n;
    }

    std::vector<double> flatten() const {
        std::vector<double> out;
        out.reserve(param_count());
        for (const auto& e : entries)
            for (Eigen::Index i = 0; i < e.w.size(); ++i)
                out.push_back(static_cast<double>(e.w.data()[i]));
        return out;
    }

    void unflatten(const std::vector<double>& flat) {
        require(flat.size() == param_count(), "ParamStore::unflatten: size mismatch");
        size_t k = 0;
        for (auto& e : entries)
            for (Eigen::Index i = 0; i < e.w.size(); ++i)
                e.w.data()[i] = static_cast<T>(flat[k++]);
    }

    std::vector<double> flatten_grad() const {
        std::vector<double> out;
        out.reserve(param_count());
        for (const auto& e : entries)
            for (Eigen::Index i = 0; i < e.g.size(); ++i)
                out.push_back(static_cast<double>(e.g.data()[i]));
        return out;
    }
};

// ---- elementwise activations ----

template <typename T>
Mat<T> silu(const Mat<T>& x) {
    return x.unaryExpr([](T v) {
        const T s = T(1) / (T(1) + std::exp(-v));
        return v * s;
    });
}

template <typename T>
Mat<T> silu_backward(const Mat<T>& x, const Mat<T>& dy) {
    Mat<T> dx(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const T v = x.data()[i];
        const T s = T(1) / (T(1) + std::exp(-v));
        dx.data()[i] = dy.data()[i] * s * (T(1) + v * (T(1) - s));
    }
    return dx;
}

// ---- im2col convolution ----

inline int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// Patch rows are gathered with one strided block copy per (ky, kx, output
// row) instead of per pixel; the column range [x0, x1) keeps ix in bounds.
template <typename T>
void im2col(const Mat<T>& x, int h, int w, int k, int stride, int pad, Mat<T>& cols) {
    const int cin = static_cast<int>(x.cols());
    const int ho = conv_out_dim(h, k, stride, pad);
    const int wo = conv_out_dim(w, k, stride, pad);
    cols.resize(static_cast<Eigen::Index>(ho) * wo, static_cast<Eigen::Index>(k) * k * cin);
    cols.setZero();
    using StridedMap =
        Eigen::Map<const Mat<T>, Eigen::Unaligned, Eigen::OuterStride<Eigen::Dynamic>>;
    for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
            const Eigen::Index c0 = static_cast<Eigen::Index>(ky * k + kx) * cin;
            // ox range with 0 <= ox*stride + kx - pad < w
            const int x0 = std::max(0, (pad - kx + stride - 1) / stride);
            const int x1 = std::min(wo, (w - 1 - kx + pad) / stride + 1);
            if (x1 <= x0) continue;
            const int run = x1 - x0;
            for (int oy = 0; oy < ho; ++oy) {
                const int iy = oy * stride + ky - pad;
                if (iy < 0 || iy >= h) continue;
                const int ix0 = x0 * stride + kx - pad;
                const T* src = x.data() + (static_cast<Eigen::Index>(iy) * w + ix0) * cin;
                cols.block(static_cast<Eigen::Index>(oy) * wo + x0, c0, run, cin) =
                    StridedMap(src, run, cin, Eigen::OuterStride<Eigen::Dynamic>(
                                                  static_cast<Eigen::Index>(stride) * cin));
            }
        }
    }
}

template <typename T>
void col2im(const Mat<T>& dcols, int h, int w, int cin, int k, int stride, int pad, Mat<T>& dx) {
    const int ho = conv_out_dim(h, k, stride, pad);
    const int wo = conv_out_dim(w, k, stride, pad);
    dx = Mat<T>::Zero(static_cast<Eigen::Index>(h) * w, cin);
    using StridedMap = Eigen::Map<Mat<T>, Eigen::Unaligned, Eigen::OuterStride<Eigen::Dynamic>>;
    for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
            const Eigen::Index c0 = static_cast<Eigen::Index>(ky * k + kx) * cin;
            const int x0 = std::max(0, (pad - kx + stride - 1) / stride);
            const int x1 = std::min(wo, (w - 1 - kx + pad) / stride + 1);
            if (x1 <= x0) continue;
            const int run = x1 - x0;
            for (int oy = 0; oy < ho; ++oy) {
                const int iy = oy * stride + ky - pad;
                if (iy < 0 || iy >= h) continue;
                const int ix0 = x0 * stride + kx - pad;
                T* dst = dx.data() + (static_cast<Eigen::Index>(iy) * w + ix0) * cin;
                StridedMap(dst, run, cin,
                           Eigen::OuterStride<Eigen::Dynamic>(
                               static_cast<Eigen::Index>(stride) * cin)) +=
                    dcols.block(static_cast<Eigen::Index>(oy) * wo + x0, c0, run, cin);
            }
        }
    }
}

template <typename T>
struct Conv2d {
    int w_idx = -1, b_idx = -1;
    int cin = 0, cout = 0, k = 3, stride = 1, pad = 1;

    void init(ParamStore<T>& ps, const std::string& name, int cin_, int cout_, int k_, int stride_,
              int pad_) {
        cin = cin_;
        cout = cout_;
        k = k_;
        stride = stride_;
        pad = pad_;
        w_idx = ps.add(name + ".w", k * k * cin, cout);
        b_idx = ps.add(name + ".b", 1, cout);
    }

    // He-normal fan-in init; bias zero.
    void init_weights(ParamStore<T>& ps, Rng& rng, double gain = 1.0) {
        const double std = gain * std::sqrt(2.0 / (k * k * cin));
        Mat<T>& W = ps.w(w_idx);
        for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = static_cast<T>(std * rng.normal());
    }

    Mat<T> forward(const ParamStore<T>& ps, const Mat<T>& x, int h, int w) const {
        Mat<T> cols;
        im2col(x, h, w, k, stride, pad, cols);
        Mat<T> y = cols * ps.w(w_idx);
        y.rowwise() += ps.w(b_idx).row(0);
        return y;
    }

    Mat<T> backward(ParamStore<T>& ps, const Mat<T>& x, int h, int w, const Mat<T>& dy) {
        Mat<T> cols;
        im2col(x, h, w, k, stride, pad, cols);
        ps.g(w_idx).noalias() += cols.transpose() * dy;
        ps.g(b_idx).row(0) += dy.colwise().sum();
        Mat<T> dcols = dy * ps.w(w_idx).transpose();
        Mat<T> dx;
        col2im(dcols, h, w, cin, k, stride, pad, dx);
        return dx;
    }
};

template <typename T>
struct Linear {
    int w_idx = -1, b_idx = -1;
    int in = 0, out = 0;

    void init(ParamStore<T>& ps, const std::string& name, int in_, int out_, bool bias = true) {
        in = in_;
        out = out_;
        w_idx = ps.add(name + ".w", in, out);
        if (bias) b_idx = ps.add(name + ".b", 1, out);
    }

    void init_weights(ParamStore<T>& ps, Rng& rng, double gain = 1.0) {
        const double std = gain * std::sqrt(1.0 / in);
        Mat<T>& W = ps.w(w_idx);
        for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = static_cast<T>(std * rng.normal());
    }

    Mat<T> forward(const ParamStore<T>& ps, const Mat<T>& x) const {
        Mat<T> y = x * ps.w(w_idx);
        if (b_idx >= 0) y.rowwise() += ps.w(b_idx).row(0);
        return y;
    }

    Mat<T> backward(ParamStore<T>& ps, const Mat<T>& x, const Mat<T>& dy) {
        ps.g(w_idx).noalias() += x.transpose() * dy;
        if (b_idx >= 0) ps.g(b_idx).row(0) += dy.colwise().sum();
        return dy * ps.w(w_idx).transpose();
    }
};

// ---- group normalization ----

inline int pick_groups(int channels, int preferred = 8) {
    for (int g = std::min(preferred, channels); g > 1; --g)
        if (channels % g == 0) return g;
    return 1;
}

template <typename T>
struct GroupNorm {
    int g_idx = -1, b_idx = -1;
    int channels = 0, groups = 1;
    static constexpr T kEps = T(1e-5);

    struct Stats {
        std::vector<T> inv_std;            // per group
        Mat<T> xhat;                       // normalized input
    };

    void init(ParamStore<T>& ps, const std::string& name, int channels_, int groups_) {
        channels = channels_;
        groups = groups_;
        require(channels % groups == 0, "GroupNorm: channels must divide into groups");
        g_idx = ps.add(name + ".g", 1, channels);
        b_idx = ps.add(name + ".b", 1, channels);
        // scale starts at one
    }

    void init_weights(ParamStore<T>& ps) { ps.w(g_idx).setOnes(); }

    Mat<T> forward(const ParamStore<T>& ps, const Mat<T>& x, Stats& st) const {
        const Eigen::Index n = x.rows();
        const int cg = channels / groups;
        st.inv_std.assign(static_cast<size_t>(groups), T(0));
        st.xhat.resize(n, channels);
        for (int g = 0; g < groups; ++g) {
            auto xb = x.block(0, static_cast<Eigen::Index>(g) * cg, n, cg);
            const T mean = xb.mean();
            const T var = (xb.array() - mean).square().mean();
            const T inv = T(1) / std::sqrt(var + kEps);
            st.inv_std[static_cast<size_t>(g)] = inv;
            st.xhat.block(0, static_cast<Eigen::Index>(g) * cg, n, cg) =
                ((xb.array() - mean) * inv).matrix();
        }
        Mat<T> y = st.xhat;
        y.array().rowwise() *= ps.w(g_idx).row(0).array();
        y.rowwise() += ps.w(b_idx).row(0);
        return y;
    }

    Mat<T> backward(ParamStore<T>& ps, const Stats& st, const Mat<T>& dy) {
        const Eigen::Index n = dy.rows();
        const int cg = channels / groups;
        for (int c = 0; c < channels; ++c) {
            ps.g(g_idx)(0, c) += (dy.col(c).array() * st.xhat.col(c).array()).sum();
            ps.g(b_idx)(0, c) += dy.col(c).sum();
        }
        Mat<T> dx(n, channels);
        for (int g = 0; g < groups; ++g) {
            const Eigen::Index c0 = static_cast<Eigen::Index>(g) * cg;
            Mat<T> gvec = dy.block(0, c0, n, cg);
            gvec.array().rowwise() *= ps.w(g_idx).row(0).segment(c0, cg).array();
            const auto xh = st.xhat.block(0, c0, n, cg);
            const T m1 = gvec.mean();
            const T m2 = (gvec.array() * xh.array()).mean();
            dx.block(0, c0, n, cg) =
                (((gvec.array() - m1) - xh.array() * m2) * st.inv_std[static_cast<size_t>(g)])
                    .matrix();
        }
        return dx;
    }
};

// ---- softmax & attention core ----

template <typename T>
void softmax_rows(Mat<T>& logits) {
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const T m = logits.row(r).maxCoeff();
        logits.row(r) = (logits.row(r).array() - m).exp().matrix();
        logits.row(r) /= logits.row(r).sum();
    }
}

// dlogits = A .* (dA - rowsum(dA .* A))
template <typename T>
Mat<T> softmax_backward(const Mat<T>& A, const Mat<T>& dA) {
    Mat<T> dlog = dA;
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
        const T dot = A.row(r).dot(dA.row(r));
        dlog.row(r) = (A.row(r).array() * (dA.row(r).array() - dot)).matrix();
    }
    return dlog;
}

// Multi-head scaled dot-product attention over garment tokens.
//   Q = p Wq, K = c Wk, V = c Wv, per head: A_h = softmax(Q_h K_h^T / sqrt(d_h)),
//   output = concat_h(A_h V_h)  (no output projection here).
// Returns per-head score maps; the head-averaged map is what gets recorded.
template <typename T>
struct AttentionCoreTrace {
    Mat<T> q, kk, vv;            // projections
    std::vector<Mat<T>> heads;   // per-head score maps, (n_pix x n_tokens)
};

template <typename T>
Mat<T> attention_core_forward(const Mat<T>& p, const Mat<T>& tokens, const Mat<T>& wq,
                              const Mat<T>& wk, const Mat<T>& wv, int heads,
                              AttentionCoreTrace<T>& tr) {
    require(p.cols() == wq.rows(), "attention: query feature dim mismatch");
    require(tokens.cols() == wk.rows(), "attention: key feature dim mismatch");
    require(tokens.cols() == wv.rows(), "attention: value feature dim mismatch");
    require(wq.cols() == wk.cols() && wk.cols() == wv.cols(), "attention: d mismatch");
    const int d = static_cast<int>(wq.cols());
    require(heads >= 1 && d % heads == 0, "attention: d must divide into heads");

    tr.q.noalias() = p * wq;
    tr.kk.noalias() = tokens * wk;
    tr.vv.noalias() = tokens * wv;
    const int dh = d / heads;
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

    Mat<T> out(p.rows(), d);
    tr.heads.resize(static_cast<size_t>(heads));
    for (int hidx = 0; hidx < heads; ++hidx) {
        const Eigen::Index c0 = static_cast<Eigen::Index>(hidx) * dh;
        Mat<T> scores = tr.q.middleCols(c0, dh) * tr.kk.middleCols(c0, dh).transpose() * scale;
        softmax_rows(scores);
        out.middleCols(c0, dh).noalias() = scores * tr.vv.middleCols(c0, dh);
        tr.heads[static_cast<size_t>(hidx)] = std::move(scores);
    }
    return out;
}

// d_out is the gradient of the concatenated head outputs; d_scores_extra, when
// present, is an additional gradient on the head-averaged score map (the
// attention-localization path) and is split evenly across heads.
template <typename T>
void attention_core_backward(const Mat<T>& p, const Mat<T>& tokens, const Mat<T>& wq,
                             const Mat<T>& wk, const Mat<T>& wv, int heads,
                             const AttentionCoreTrace<T>& tr, const Mat<T>& d_out,
                             const Mat<T>* d_scores_extra, Mat<T>& dp, Mat<T>& dwq, Mat<T>& dwk,
                             Mat<T>& dwv, Mat<T>* d_tokens = nullptr) {
    const int d = static_cast<int>(wq.cols());
    const int dh = d / heads;
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
    const T head_share = static_cast<T>(1.0 / heads);

    Mat<T> dq = Mat<T>::Zero(tr.q.rows(), d);
    Mat<T> dk = Mat<T>::Zero(tr.kk.rows(), d);
    Mat<T> dv = Mat<T>::Zero(tr.vv.rows(), d);
    for (int hidx = 0; hidx < heads; ++hidx) {
        const Eigen::Index c0 = static_cast<Eigen::Index>(hidx) * dh;
        const Mat<T>& A = tr.heads[static_cast<size_t>(hidx)];
        Mat<T> dA = d_out.middleCols(c0, dh) * tr.vv.middleCols(c0, dh).transpose();
        if (d_scores_extra) dA += *d_scores_extra * head_share;
        dv.middleCols(c0, dh).noalias() += A.transpose() * d_out.middleCols(c0, dh);
        Mat<T> dlog = softmax_backward(A, dA);
        dq.middleCols(c0, dh).noalias() += dlog * tr.kk.middleCols(c0, dh) * scale;
        dk.middleCols(c0, dh).noalias() += dlog.transpose() * tr.q.middleCols(c0, dh) * scale;
    }
    dwq.noalias() = p.transpose() * dq;
    dwk.noalias() = tokens.transpose() * dk;
    dwv.noalias() = tokens.transpose() * dv;
    dp.noalias() = dq * wq.transpose();
    // token gradients are only materialized on request; the garment encoder
    // stays frozen during try-on training
    if (d_tokens) d_tokens->noalias() += dk * wk.transpose() + dv * wv.transpose();
}

// ---- spatial resampling on (h*w x c) matrices ----

template <typename T>
Mat<T> upsample2_nearest(const Mat<T>& x, int h, int w) {
    Mat<T> y(static_cast<Eigen::Index>(4) * h * w, x.cols());
    for (int yy = 0; yy < 2 * h; ++yy)
        for (int xx = 0; xx < 2 * w; ++xx)
            y.row(static_cast<Eigen::Index>(yy) * 2 * w + xx) =
                x.row(static_cast<Eigen::Index>(yy / 2) * w + xx / 2);
    return y;
}

template <typename T>
Mat<T> upsample2_nearest_backward(const Mat<T>& dy, int h, int w) {
    Mat<T> dx = Mat<T>::Zero(static_cast<Eigen::Index>(h) * w, dy.cols());
    for (int yy = 0; yy < 2 * h; ++yy)
        for (int xx = 0; xx < 2 * w; ++xx)
            dx.row(static_cast<Eigen::Index>(yy / 2) * w + xx / 2) +=
                dy.row(static_cast<Eigen::Index>(yy) * 2 * w + xx);
    return dx;
}

// Average pooling with square cells (cell divides both dims).
template <typename T>
Mat<T> avgpool(const Mat<T>& x, int h, int w, int cell) {
    const int ho = h / cell, wo = w / cell;
    Mat<T> y = Mat<T>::Zero(static_cast<Eigen::Index>(ho) * wo, x.cols());
    for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx)
            y.row(static_cast<Eigen::Index>(yy / cell) * wo + xx / cell) +=
                x.row(static_cast<Eigen::Index>(yy) * w + xx);
    y *= static_cast<T>(1.0 / (cell * cell));
    return y;
}

template <typename T>
Mat<T> avgpool_backward(const Mat<T>& dy, int h, int w, int cell) {
    const int wo = w / cell;
    Mat<T> dx(static_cast<Eigen::Index>(h) * w, dy.cols());
    const T s = static_cast<T>(1.0 / (cell * cell));
    for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx)
            dx.row(static_cast<Eigen::Index>(yy) * w + xx) =
                dy.row(static_cast<Eigen::Index>(yy / cell) * wo + xx / cell) * s;
    return dx;
}

// ---- sinusoidal timestep embedding ----

template <typename T>
Mat<T> timestep_embedding(int t, int dim) {
    require(t >= 0, "timestep_embedding: t must be >= 0");
    require(dim >= 2 && dim % 2 == 0, "timestep_embedding: dim must be even");
    const int half = dim / 2;
    Mat<T> e(1, dim);
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * i / half);
        e(0, i) = static_cast<T>(std::sin(t * freq));
        e(0, half + i) = static_cast<T>(std::cos(t * freq));
    }
    return e;
}

// ---- Adam ----

template <typename T>
struct Adam {
    double lr = 1e-4, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::vector<Mat<T>> m, v;
    int64_t steps = 0;

    void init(const ParamStore<T>& ps) {
        m.clear();
        v.clear();
        for (const auto& e : ps.entries) {
            m.push_back(Mat<T>::Zero(e.w.rows(), e.w.cols()));
            v.push_back(Mat<T>::Zero(e.w.rows(), e.w.cols()));
        }
        steps = 0;
    }

    void step(ParamStore<T>& ps) {
        ++steps;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
        const T a = static_cast<T>(lr / bc1);
        for (size_t i = 0; i < ps.entries.size(); ++i) {
            auto& e = ps.entries[i];
            m[i] = static_cast<T>(beta1) * m[i] + static_cast<T>(1.0 - beta1) * e.g;
            v[i] = static_cast<T>(beta2) * v[i] +
                   static_cast<T>(1.0 - beta2) * e.g.cwiseProduct(e.g);
            e.w.array() -=
                a * m[i].array() /
                ((v[i].array() / static_cast<T>(bc2)).sqrt() + static_cast<T>(eps));
        }
    }
};

}  // namespace tryon::nn
