#include "tryon/garment_encoder.hpp"

#include "tryon/convert.hpp"

namespace tryon {

void GarmentEncoderConfig::validate() const {
    require(resolution % 4 == 0, "garment encoder: resolution must be divisible by 4");
    require((resolution / 4) % grid == 0,
            "garment encoder: resolution/4 must be divisible by the token grid");
    require(feature_dim >= 1 && grid >= 1, "garment encoder: bad dims");
}

template <typename T>
nn::Mat<T> GarmentEncoderT<T>::forward_trace(const Image& img, Trace& tr) const {
    require(img.c == 3, "encode_garment: expected RGB");
    require(img.h == cfg.resolution && img.w == cfg.resolution,
            "encode_garment: resolution mismatch");
    tr.x0 = to_mat<T>(img);
    tr.s1 = cfg.resolution / 2;
    tr.s2 = cfg.resolution / 4;
    tr.h1 = conv1_.forward(params, tr.x0, cfg.resolution, cfg.resolution);
    tr.a1 = nn::silu(tr.h1);
    tr.h2 = conv2_.forward(params, tr.a1, tr.s1, tr.s1);
    tr.a2 = nn::silu(tr.h2);
    const int cell = tr.s2 / cfg.grid;
    tr.pooled = nn::avgpool(tr.a2, tr.s2, tr.s2, cell);
    return proj_.forward(params, tr.pooled);
}

template <typename T>
nn::Mat<T> GarmentEncoderT<T>::encode_mat(const Image& img) const {
    Trace tr;
    return forward_trace(img, tr);
}

template <typename T>
void GarmentEncoderT<T>::backward(const Trace& tr, const nn::Mat<T>& d_tokens) {
    const int cell = tr.s2 / cfg.grid;
    nn::Mat<T> d_pooled = proj_.backward(params, tr.pooled, d_tokens);
    nn::Mat<T> d_a2 = nn::avgpool_backward(d_pooled, tr.s2, tr.s2, cell);
    nn::Mat<T> d_h2 = nn::silu_backward(tr.h2, d_a2);
    nn::Mat<T> d_a1 = conv2_.backward(params, tr.a1, tr.s1, tr.s1, d_h2);
    nn::Mat<T> d_h1 = nn::silu_backward(tr.h1, d_a1);
    conv1_.backward(params, tr.x0, cfg.resolution, cfg.resolution, d_h1);
}

namespace {

// Warm-up decoder: per-cell linear back to conv width, nearest upsampling
// with two conv stages, final RGB conv.
template <typename T>
struct WarmupDecoder {
    nn::ParamStore<T> params;
    nn::Linear<T> lin;
    nn::Conv2d<T> c1, c2, c3;
    const GarmentEncoderConfig cfg;

    explicit WarmupDecoder(const GarmentEncoderConfig& c) : cfg(c) {
        lin.init(params, "dlin", cfg.feature_dim, cfg.width2);
        c1.init(params, "dconv1", cfg.width2, cfg.width1, 3, 1, 1);
        c2.init(params, "dconv2", cfg.width1, cfg.width1, 3, 1, 1);
        c3.init(params, "dconv3", cfg.width1, 3, 3, 1, 1);
    }

    void init_weights(Rng& rng) {
        lin.init_weights(params, rng);
        c1.init_weights(params, rng);
        c2.init_weights(params, rng);
        c3.init_weights(params, rng);
    }

    struct Trace {
        nn::Mat<T> tokens, tok_feat, grid_up, h1, a1, up1, h2, a2, up2;
        int s2 = 0, s1 = 0, res = 0;
    };

    nn::Mat<T> forward(const nn::Mat<T>& tokens, Trace& tr) {
        tr.res = cfg.resolution;
        tr.s1 = cfg.resolution / 2;
        tr.s2 = cfg.resolution / 4;
        const int cell = tr.s2 / cfg.grid;
        tr.tokens = tokens;
        tr.tok_feat = lin.forward(params, tokens);
        // nearest-upsample grid cells back to the s2 map
        tr.grid_up.resize(static_cast<Eigen::Index>(tr.s2) * tr.s2, cfg.width2);
        for (int y = 0; y < tr.s2; ++y)
            for (int x = 0; x < tr.s2; ++x)
                tr.grid_up.row(static_cast<Eigen::Index>(y) * tr.s2 + x) =
                    tr.tok_feat.row(static_cast<Eigen::Index>(y / cell) * cfg.grid + x / cell);
        tr.h1 = c1.forward(params, tr.grid_up, tr.s2, tr.s2);
        tr.a1 = nn::silu(tr.h1);
        tr.up1 = nn::upsample2_nearest(tr.a1, tr.s2, tr.s2);
        tr.h2 = c2.forward(params, tr.up1, tr.s1, tr.s1);
        tr.a2 = nn::silu(tr.h2);
        tr.up2 = nn::upsample2_nearest(tr.a2, tr.s1, tr.s1);
        return c3.forward(params, tr.up2, tr.res, tr.res);
    }

    nn::Mat<T> backward(const Trace& tr, const nn::Mat<T>& d_out) {
        const int cell = tr.s2 / cfg.grid;
        nn::Mat<T> d_up2 = c3.backward(params, tr.up2, tr.res, tr.res, d_out);
        nn::Mat<T> d_a2 = nn::upsample2_nearest_backward(d_up2, tr.s1, tr.s1);
        nn::Mat<T> d_h2 = nn::silu_backward(tr.h2, d_a2);
        nn::Mat<T> d_up1 = c2.backward(params, tr.up1, tr.s1, tr.s1, d_h2);
        nn::Mat<T> d_a1 = nn::upsample2_nearest_backward(d_up1, tr.s2, tr.s2);
        nn::Mat<T> d_h1 = nn::silu_backward(tr.h1, d_a1);
        nn::Mat<T> d_grid = c1.backward(params, tr.grid_up, tr.s2, tr.s2, d_h1);
        nn::Mat<T> d_tok_feat = nn::Mat<T>::Zero(tr.tok_feat.rows(), tr.tok_feat.cols());
        for (int y = 0; y < tr.s2; ++y)
            for (int x = 0; x < tr.s2; ++x)
                d_tok_feat.row(static_cast<Eigen::Index>(y / cell) * cfg.grid + x / cell) +=
                    d_grid.row(static_cast<Eigen::Index>(y) * tr.s2 + x);
        return lin.backward(params, tr.tokens, d_tok_feat);
    }
};

}  // namespace

template <typename T>
std::vector<double> pretrain_warmup(GarmentEncoderT<T>& enc, const std::vector<Image>& garments,
                                    int steps, double lr, uint64_t seed) {
    require(!garments.empty(), "pretrain_warmup: empty garment dataset");
    require(steps >= 0, "pretrain_warmup: steps must be >= 0");
    if (steps == 0) return {};

    Rng rng(seed);
    WarmupDecoder<T> dec(enc.cfg);
    dec.init_weights(rng);

    nn::Adam<T> opt_enc, opt_dec;
    opt_enc.lr = lr;
    opt_dec.lr = lr;
    opt_enc.init(enc.params);
    opt_dec.init(dec.params);

    std::vector<double> losses;
    losses.reserve(static_cast<size_t>(steps));
    for (int s = 0; s < steps; ++s) {
        const auto& img = garments[static_cast<size_t>(
            rng.uniform_int(0, static_cast<int64_t>(garments.size()) - 1))];
        enc.params.zero_grad();
        dec.params.zero_grad();

        typename GarmentEncoderT<T>::Trace etr;
        nn::Mat<T> tokens = enc.forward_trace(img, etr);
        typename WarmupDecoder<T>::Trace dtr;
        nn::Mat<T> recon = dec.forward(tokens, dtr);

        const nn::Mat<T> target = to_mat<T>(img);
        nn::Mat<T> diff = recon - target;
        const double loss = static_cast<double>(diff.squaredNorm()) / diff.size();
        losses.push_back(loss);

        nn::Mat<T> d_out = diff * static_cast<T>(2.0 / diff.size());
        nn::Mat<T> d_tokens = dec.backward(dtr, d_out);
        enc.backward(etr, d_tokens);

        opt_dec.step(dec.params);
        opt_enc.step(enc.params);
    }
    return losses;
}

uint64_t encoder_param_hash(const GarmentEncoder& enc) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& e : enc.params.entries) {
        h = fnv1a64(e.name.data(), e.name.size(), h);
        h = fnv1a64(e.w.data(), static_cast<size_t>(e.w.size()) * sizeof(double), h);
    }
    return h;
}

template class GarmentEncoderT<float>;
template class GarmentEncoderT<double>;
template std::vector<double> pretrain_warmup<float>(GarmentEncoderT<float>&,
                                                    const std::vector<Image>&, int, double,
                                                    uint64_t);
template std::vector<double> pretrain_warmup<double>(GarmentEncoderT<double>&,
                                                     const std::vector<Image>&, int, double,
                                                     uint64_t);

}  // namespace tryon
