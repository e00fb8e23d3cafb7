#include "tryon/unet.hpp"

#include <array>

#include "tryon/convert.hpp"

namespace tryon {

void UNetConfig::validate() const {
    require(resolution >= 4 && resolution % 4 == 0, "unet: resolution must be divisible by 4");
    require(attn_dim % heads == 0, "unet: attn_dim must divide into heads");
    require(time_embed_dim % 2 == 0, "unet: time_embed_dim must be even");
    require(latent_channels >= 1, "unet: latent_channels must be >= 1");
}

template <typename T>
TryOnUNetT<T>::TryOnUNetT(const UNetConfig& c) : cfg(c) {
    cfg.validate();
    const int e = cfg.time_embed_dim;
    conv_in_.init(params, "conv_in", cfg.in_channels(), cfg.width0, 3, 1, 1);
    tmlp1_.init(params, "temb.lin1", e, e);
    tmlp2_.init(params, "temb.lin2", e, e);
    rb0_.init(params, "rb0", cfg.width0, cfg.width0, e);
    down0_.init(params, "down0", cfg.width0, cfg.width1, 3, 2, 1);
    rb1_.init(params, "rb1", cfg.width1, cfg.width1, e);
    attn0_.init(params, "attn0", cfg.width1, cfg.token_feature_dim, cfg.attn_dim, cfg.heads);
    down1_.init(params, "down1", cfg.width1, cfg.width2, 3, 2, 1);
    rb2_.init(params, "rb2", cfg.width2, cfg.width2, e);
    attn1_.init(params, "attn1", cfg.width2, cfg.token_feature_dim, cfg.attn_dim, cfg.heads);
    upc1_.init(params, "upc1", cfg.width2, cfg.width1, 3, 1, 1);
    rbu1_.init(params, "rbu1", 2 * cfg.width1, cfg.width1, e);
    upc0_.init(params, "upc0", cfg.width1, cfg.width0, 3, 1, 1);
    rbu0_.init(params, "rbu0", 2 * cfg.width0, cfg.width0, e);
    gn_out_.init(params, "out.gn", cfg.width0, nn::pick_groups(cfg.width0));
    conv_out_.init(params, "out.conv", cfg.width0, cfg.latent_channels, 3, 1, 1);
}

template <typename T>
void TryOnUNetT<T>::init_weights(Rng& rng) {
    conv_in_.init_weights(params, rng);
    tmlp1_.init_weights(params, rng);
    tmlp2_.init_weights(params, rng);
    rb0_.init_weights(params, rng);
    down0_.init_weights(params, rng);
    rb1_.init_weights(params, rng);
    attn0_.init_weights(params, rng);
    down1_.init_weights(params, rng);
    rb2_.init_weights(params, rng);
    attn1_.init_weights(params, rng);
    upc1_.init_weights(params, rng);
    rbu1_.init_weights(params, rng);
    upc0_.init_weights(params, rng);
    rbu0_.init_weights(params, rng);
    gn_out_.init_weights(params);
    if (!cfg.zero_init_final) conv_out_.init_weights(params, rng);
    // zero-init final conv keeps the initial prediction at zero
}

template <typename T>
nn::Mat<T> TryOnUNetT<T>::forward(const nn::Mat<T>& x, int t, const nn::Mat<T>& tokens, Trace& tr,
                                  AttentionRecord* rec) const {
    const int r0 = cfg.resolution, r1 = r0 / 2, r2 = r0 / 4;
    require(x.rows() == static_cast<Eigen::Index>(r0) * r0 && x.cols() == cfg.in_channels(),
            "unet: input shape mismatch");
    require(tokens.cols() == cfg.token_feature_dim, "unet: token feature dim mismatch");

    tr.x_in = x;
    tr.temb_sin = nn::timestep_embedding<T>(t, cfg.time_embed_dim);
    tr.temb_h = tmlp1_.forward(params, tr.temb_sin);
    tr.temb = tmlp2_.forward(params, nn::silu(tr.temb_h));

    tr.x0 = conv_in_.forward(params, x, r0, r0);
    tr.skip0 = rb0_.forward(params, tr.x0, r0, r0, tr.temb, tr.rb0);

    nn::Mat<T> h1 = down0_.forward(params, tr.skip0, r0, r0);
    h1 = rb1_.forward(params, h1, r1, r1, tr.temb, tr.rb1);
    tr.head_avgs.clear();
    tr.head_avgs.resize(2);
    tr.skip1 = attn0_.forward(params, h1, tokens, tr.at0, tr.head_avgs[0]);

    nn::Mat<T> h2 = down1_.forward(params, tr.skip1, r1, r1);
    h2 = rb2_.forward(params, h2, r2, r2, tr.temb, tr.rb2);
    nn::Mat<T> mid = attn1_.forward(params, h2, tokens, tr.at1, tr.head_avgs[1]);

    tr.mid_up = nn::upsample2_nearest(mid, r2, r2);
    nn::Mat<T> u1 = upc1_.forward(params, tr.mid_up, r1, r1);
    tr.up1_cat.resize(u1.rows(), 2 * cfg.width1);
    tr.up1_cat << u1, tr.skip1;
    tr.u1 = rbu1_.forward(params, tr.up1_cat, r1, r1, tr.temb, tr.rbu1);

    tr.u1_up = nn::upsample2_nearest(tr.u1, r1, r1);
    nn::Mat<T> u0 = upc0_.forward(params, tr.u1_up, r0, r0);
    tr.up0_cat.resize(u0.rows(), 2 * cfg.width0);
    tr.up0_cat << u0, tr.skip0;
    tr.gn_out_in = rbu0_.forward(params, tr.up0_cat, r0, r0, tr.temb, tr.rbu0);

    tr.gn_out_val = gn_out_.forward(params, tr.gn_out_in, tr.st_out);
    tr.a_out = nn::silu(tr.gn_out_val);
    nn::Mat<T> eps = conv_out_.forward(params, tr.a_out, r0, r0);

    if (rec) {
        rec->clear();
        rec->push_back({0, r1, r1, tr.head_avgs[0].template cast<double>()});
        rec->push_back({1, r2, r2, tr.head_avgs[1].template cast<double>()});
    }
    return eps;
}

template <typename T>
void TryOnUNetT<T>::backward(Trace& tr, const nn::Mat<T>& tokens, const nn::Mat<T>& d_eps,
                             const std::vector<nn::Mat<T>>& d_attn, nn::Mat<T>* d_tokens) {
    if (d_tokens) d_tokens->setZero(tokens.rows(), tokens.cols());
    const int r0 = cfg.resolution, r1 = r0 / 2, r2 = r0 / 4;
    nn::Mat<T> d_temb = nn::Mat<T>::Zero(1, cfg.time_embed_dim);

    nn::Mat<T> d_a_out = conv_out_.backward(params, tr.a_out, r0, r0, d_eps);
    nn::Mat<T> d_gn_out = nn::silu_backward(tr.gn_out_val, d_a_out);
    nn::Mat<T> d_rbu0 = gn_out_.backward(params, tr.st_out, d_gn_out);

    nn::Mat<T> d_up0_cat = rbu0_.backward(params, tr.rbu0, r0, r0, tr.temb, d_rbu0, d_temb);
    nn::Mat<T> d_u0 = d_up0_cat.leftCols(cfg.width0);
    nn::Mat<T> d_skip0 = d_up0_cat.rightCols(cfg.width0);

    nn::Mat<T> d_u1_up = upc0_.backward(params, tr.u1_up, r0, r0, d_u0);
    nn::Mat<T> d_u1 = nn::upsample2_nearest_backward(d_u1_up, r1, r1);

    nn::Mat<T> d_up1_cat = rbu1_.backward(params, tr.rbu1, r1, r1, tr.temb, d_u1, d_temb);
    nn::Mat<T> d_u1in = d_up1_cat.leftCols(cfg.width1);
    nn::Mat<T> d_skip1 = d_up1_cat.rightCols(cfg.width1);

    nn::Mat<T> d_mid_up = upc1_.backward(params, tr.mid_up, r1, r1, d_u1in);
    nn::Mat<T> d_mid = nn::upsample2_nearest_backward(d_mid_up, r2, r2);

    const nn::Mat<T>* ds1 = d_attn.size() > 1 && d_attn[1].size() > 0 ? &d_attn[1] : nullptr;
    nn::Mat<T> d_h2 = attn1_.backward(params, tr.at1, tokens, d_mid, ds1, d_tokens);
    d_h2 = rb2_.backward(params, tr.rb2, r2, r2, tr.temb, d_h2, d_temb);
    nn::Mat<T> d_d1in = down1_.backward(params, tr.skip1, r1, r1, d_h2);
    d_d1in += d_skip1;

    const nn::Mat<T>* ds0 = !d_attn.empty() && d_attn[0].size() > 0 ? &d_attn[0] : nullptr;
    nn::Mat<T> d_h1 = attn0_.backward(params, tr.at0, tokens, d_d1in, ds0, d_tokens);
    d_h1 = rb1_.backward(params, tr.rb1, r1, r1, tr.temb, d_h1, d_temb);
    nn::Mat<T> d_d0in = down0_.backward(params, tr.skip0, r0, r0, d_h1);
    d_d0in += d_skip0;

    nn::Mat<T> d_x0 = rb0_.backward(params, tr.rb0, r0, r0, tr.temb, d_d0in, d_temb);
    conv_in_.backward(params, tr.x_in, r0, r0, d_x0);

    // time-embedding MLP
    nn::Mat<T> silu_h = nn::silu(tr.temb_h);
    nn::Mat<T> d_silu_h = tmlp2_.backward(params, silu_h, d_temb);
    nn::Mat<T> d_temb_h = nn::silu_backward(tr.temb_h, d_silu_h);
    tmlp1_.backward(params, tr.temb_sin, d_temb_h);
}

template <typename T>
std::vector<std::array<int, 3>> TryOnUNetT<T>::block_layout() const {
    return {{0, cfg.resolution / 2, cfg.resolution / 2},
            {1, cfg.resolution / 4, cfg.resolution / 4}};
}

std::pair<Latent, AttentionRecord> predict_noise(const TryOnUNet& net,
                                                 const ConditioningBundle& bundle, int t,
                                                 const GarmentTokens& tokens) {
    const auto& cfg = net.cfg;
    require(t >= 1 && t <= cfg.max_timestep, "predict_noise: t out of range");
    require(bundle.z_t.h == cfg.resolution && bundle.z_t.w == cfg.resolution &&
                bundle.z_t.c == cfg.latent_channels,
            "predict_noise: z_t shape mismatch");
    require(bundle.pose.same_shape(bundle.z_t) && bundle.source.same_shape(bundle.z_t),
            "predict_noise: conditioning latents must match z_t shape");
    require(tokens.f() == cfg.token_feature_dim, "predict_noise: token feature dim mismatch");

    const int n = cfg.resolution * cfg.resolution;
    nn::Mat<double> x(n, cfg.in_channels());
    x << to_mat<double>(bundle.z_t), to_mat<double>(bundle.pose), to_mat<double>(bundle.source);

    typename TryOnUNet::Trace tr;
    AttentionRecord rec;
    nn::Mat<double> eps = net.forward(x, t, tokens.tokens, tr, &rec);
    return {from_mat(eps, cfg.resolution, cfg.resolution), rec};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> cross_attention(const Eigen::MatrixXd& p,
                                                            const Eigen::MatrixXd& tokens,
                                                            const Eigen::MatrixXd& wq,
                                                            const Eigen::MatrixXd& wk,
                                                            const Eigen::MatrixXd& wv, int heads) {
    nn::AttentionCoreTrace<double> tr;
    nn::Mat<double> p_attn = nn::attention_core_forward<double>(p, tokens, wq, wk, wv, heads, tr);
    nn::Mat<double> avg = tr.heads[0];
    for (size_t i = 1; i < tr.heads.size(); ++i) avg += tr.heads[i];
    avg *= 1.0 / heads;
    return {Eigen::MatrixXd(p_attn), Eigen::MatrixXd(avg)};
}

template class TryOnUNetT<float>;
template class TryOnUNetT<double>;

}  // namespace tryon
