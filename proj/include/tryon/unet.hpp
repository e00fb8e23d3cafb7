#pragma once

#include <array>
#include <utility>
#include <vector>

#include "tryon/attention_record.hpp"
#include "tryon/garment_encoder.hpp"
#include "tryon/nn.hpp"
#include "tryon/tensor.hpp"

namespace tryon {

// Denoiser input: z_t plus the two conditioning latents, concatenated along
// channels in the fixed order [z_t | pose | source].
struct ConditioningBundle {
    Latent z_t;
    Latent pose;    // encoded pose map
    Latent source;  // encoded source-person image
};

struct UNetConfig {
    int latent_channels = 3;
    int resolution = 48;  // latent side; must be divisible by 4
    int width0 = 16, width1 = 32, width2 = 32;
    int heads = 2;
    int attn_dim = 64;           // d of Q/K/V
    int token_feature_dim = 64;  // f of garment tokens
    int time_embed_dim = 64;
    int max_timestep = 1000;
    bool zero_init_final = true;

    int in_channels() const { return 3 * latent_channels; }
    void validate() const;
};

namespace detail {

template <typename T>
struct ResBlock {
    nn::GroupNorm<T> gn1, gn2;
    nn::Conv2d<T> conv1, conv2;
    nn::Linear<T> tproj;
    nn::Conv2d<T> skip;  // 1x1 projection when cin != cout
    bool has_skip = false;
    int cin = 0, cout = 0;

    void init(nn::ParamStore<T>& ps, const std::string& name, int cin_, int cout_, int temb_dim) {
        cin = cin_;
        cout = cout_;
        gn1.init(ps, name + ".gn1", cin, nn::pick_groups(cin));
        conv1.init(ps, name + ".conv1", cin, cout, 3, 1, 1);
        tproj.init(ps, name + ".temb", temb_dim, cout);
        gn2.init(ps, name + ".gn2", cout, nn::pick_groups(cout));
        conv2.init(ps, name + ".conv2", cout, cout, 3, 1, 1);
        has_skip = cin != cout;
        if (has_skip) skip.init(ps, name + ".skip", cin, cout, 1, 1, 0);
    }

    void init_weights(nn::ParamStore<T>& ps, Rng& rng) {
        gn1.init_weights(ps);
        gn2.init_weights(ps);
        conv1.init_weights(ps, rng);
        conv2.init_weights(ps, rng);
        tproj.init_weights(ps, rng);
        if (has_skip) skip.init_weights(ps, rng);
    }

    struct Trace {
        nn::Mat<T> x, gn1_out, a1, h_mid, gn2_out, a2;
        typename nn::GroupNorm<T>::Stats st1, st2;
    };

    nn::Mat<T> forward(const nn::ParamStore<T>& ps, const nn::Mat<T>& x, int h, int w,
                       const nn::Mat<T>& temb, Trace& tr) const {
        tr.x = x;
        tr.gn1_out = gn1.forward(ps, x, tr.st1);
        tr.a1 = nn::silu(tr.gn1_out);
        tr.h_mid = conv1.forward(ps, tr.a1, h, w);
        const nn::Mat<T> tb = tproj.forward(ps, temb);
        tr.h_mid.rowwise() += tb.row(0);
        tr.gn2_out = gn2.forward(ps, tr.h_mid, tr.st2);
        tr.a2 = nn::silu(tr.gn2_out);
        nn::Mat<T> y = conv2.forward(ps, tr.a2, h, w);
        if (has_skip)
            y += skip.forward(ps, x, h, w);
        else
            y += x;
        return y;
    }

    // Returns dx; accumulates the block's contribution to d_temb.
    nn::Mat<T> backward(nn::ParamStore<T>& ps, Trace& tr, int h, int w, const nn::Mat<T>& temb,
                        const nn::Mat<T>& dy, nn::Mat<T>& d_temb) {
        nn::Mat<T> da2 = conv2.backward(ps, tr.a2, h, w, dy);
        nn::Mat<T> dgn2 = nn::silu_backward(tr.gn2_out, da2);
        nn::Mat<T> dh_mid = gn2.backward(ps, tr.st2, dgn2);
        nn::Mat<T> d_tb(1, cout);
        d_tb.row(0) = dh_mid.colwise().sum();
        d_temb += tproj.backward(ps, temb, d_tb);
        nn::Mat<T> da1 = conv1.backward(ps, tr.a1, h, w, dh_mid);
        nn::Mat<T> dgn1 = nn::silu_backward(tr.gn1_out, da1);
        nn::Mat<T> dx = gn1.backward(ps, tr.st1, dgn1);
        if (has_skip)
            dx += skip.backward(ps, tr.x, h, w, dy);
        else
            dx += dy;
        return dx;
    }
};

template <typename T>
struct CrossAttnBlock {
    int wq = -1, wk = -1, wv = -1, wo = -1;
    int channels = 0, token_f = 0, d = 0, heads = 1;

    void init(nn::ParamStore<T>& ps, const std::string& name, int channels_, int token_f_, int d_,
              int heads_) {
        channels = channels_;
        token_f = token_f_;
        d = d_;
        heads = heads_;
        wq = ps.add(name + ".wq", channels, d);
        wk = ps.add(name + ".wk", token_f, d);
        wv = ps.add(name + ".wv", token_f, d);
        wo = ps.add(name + ".wo", d, channels);
    }

    void init_weights(nn::ParamStore<T>& ps, Rng& rng) {
        auto fill = [&](int idx, double std) {
            auto& W = ps.w(idx);
            for (Eigen::Index i = 0; i < W.size(); ++i)
                W.data()[i] = static_cast<T>(std * rng.normal());
        };
        fill(wq, std::sqrt(1.0 / channels));
        fill(wk, std::sqrt(1.0 / token_f));
        fill(wv, std::sqrt(1.0 / token_f));
        fill(wo, std::sqrt(1.0 / d));
    }

    struct Trace {
        nn::Mat<T> x, core_out;
        nn::AttentionCoreTrace<T> core;
    };

    // Residual attention: y = x + attn(x, tokens) Wo. head_avg gets the
    // head-averaged score map.
    nn::Mat<T> forward(const nn::ParamStore<T>& ps, const nn::Mat<T>& x, const nn::Mat<T>& tokens,
                       Trace& tr, nn::Mat<T>& head_avg) const {
        tr.x = x;
        tr.core_out = nn::attention_core_forward(x, tokens, ps.w(wq), ps.w(wk), ps.w(wv), heads,
                                                 tr.core);
        head_avg = tr.core.heads[0];
        for (size_t i = 1; i < tr.core.heads.size(); ++i) head_avg += tr.core.heads[i];
        head_avg *= static_cast<T>(1.0 / heads);
        return x + tr.core_out * ps.w(wo);
    }

    nn::Mat<T> backward(nn::ParamStore<T>& ps, Trace& tr, const nn::Mat<T>& tokens,
                        const nn::Mat<T>& dy, const nn::Mat<T>* d_scores,
                        nn::Mat<T>* d_tokens = nullptr) {
        nn::Mat<T> d_core = dy * ps.w(wo).transpose();
        ps.g(wo).noalias() += tr.core_out.transpose() * dy;
        nn::Mat<T> dp, dwq, dwk, dwv;
        nn::attention_core_backward(tr.x, tokens, ps.w(wq), ps.w(wk), ps.w(wv), heads, tr.core,
                                    d_core, d_scores, dp, dwq, dwk, dwv, d_tokens);
        ps.g(wq) += dwq;
        ps.g(wk) += dwk;
        ps.g(wv) += dwv;
        return dy + dp;
    }
};

}  // namespace detail

// Two-down/two-up denoising U-Net with cross-attention over garment tokens
// at the two lowest resolutions. Score maps are captured head-averaged, in a
// fixed block order (block 0 at resolution/2, block 1 at resolution/4).
template <typename T>
class TryOnUNetT {
public:
    UNetConfig cfg;
    nn::ParamStore<T> params;

    explicit TryOnUNetT(const UNetConfig& c);

    void init_weights(Rng& rng);

    struct Trace {
        nn::Mat<T> x_in, x0;
        nn::Mat<T> temb_sin, temb_h, temb;  // mlp stages
        typename detail::ResBlock<T>::Trace rb0, rb1, rb2, rbu1, rbu0;
        typename detail::CrossAttnBlock<T>::Trace at0, at1;
        nn::Mat<T> skip0, skip1;            // skip connections (rb0 out, attn0 out); also feed the downsample convs
        nn::Mat<T> mid_up, up1_cat, u1, u1_up, up0_cat;
        nn::Mat<T> gn_out_in, gn_out_val, a_out;
        typename nn::GroupNorm<T>::Stats st_out;
        std::vector<nn::Mat<T>> head_avgs;  // per attention block
    };

    // x: (resolution^2 x in_channels) bundle matrix. rec, when non-null,
    // receives one entry per cross-attention block in block order.
    nn::Mat<T> forward(const nn::Mat<T>& x, int t, const nn::Mat<T>& tokens, Trace& tr,
                       AttentionRecord* rec) const;

    // d_eps: gradient on the predicted noise. d_attn: optional per-block
    // gradients on the head-averaged score maps (empty to skip). d_tokens,
    // when non-null, receives the gradient w.r.t. the garment tokens (used
    // by sensitivity checks; training leaves it null - the encoder is
    // frozen).
    void backward(Trace& tr, const nn::Mat<T>& tokens, const nn::Mat<T>& d_eps,
                  const std::vector<nn::Mat<T>>& d_attn, nn::Mat<T>* d_tokens = nullptr);

    // Attention block descriptors in record order: {block_id, latent h, latent w}.
    std::vector<std::array<int, 3>> block_layout() const;

private:
    detail::ResBlock<T> rb0_, rb1_, rb2_, rbu1_, rbu0_;
    detail::CrossAttnBlock<T> attn0_, attn1_;
    nn::Conv2d<T> conv_in_, down0_, down1_, upc1_, upc0_, conv_out_;
    nn::Linear<T> tmlp1_, tmlp2_;
    nn::GroupNorm<T> gn_out_;
};

using TryOnUNet = TryOnUNetT<double>;

// Assembles the channel-concatenated input and runs the denoiser.
// Validates shapes and 1 <= t <= cfg.max_timestep.
std::pair<Latent, AttentionRecord> predict_noise(const TryOnUNet& net,
                                                 const ConditioningBundle& bundle, int t,
                                                 const GarmentTokens& tokens);

// The spec'd attention operation on its own: p_attn = concat_h(A_h V_h),
// A = head-average of softmax(Q_h K_h^T / sqrt(d_h)).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> cross_attention(const Eigen::MatrixXd& p,
                                                            const Eigen::MatrixXd& tokens,
                                                            const Eigen::MatrixXd& wq,
                                                            const Eigen::MatrixXd& wk,
                                                            const Eigen::MatrixXd& wv, int heads);

extern template class TryOnUNetT<float>;
extern template class TryOnUNetT<double>;

}  // namespace tryon
