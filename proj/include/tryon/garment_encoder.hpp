#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "tryon/nn.hpp"
#include "tryon/tensor.hpp"

namespace tryon {

// Token matrix emitted by the garment encoder: one row per pooling cell in
// raster order, f feature dims.
struct GarmentTokens {
    Eigen::MatrixXd tokens;  // l x f
    int l() const { return static_cast<int>(tokens.rows()); }
    int f() const { return static_cast<int>(tokens.cols()); }
};

struct GarmentEncoderConfig {
    int resolution = 48;   // input image side (square)
    int grid = 4;          // pooling grid side; token count l = grid*grid
    int feature_dim = 64;  // f
    int width1 = 16;       // first conv width
    int width2 = 32;       // second conv width

    int tokens() const { return grid * grid; }
    void validate() const;
};

// Strided convolutional encoder pooled to a grid of tokens. Frozen after
// warm-up: encode() never touches gradients.
template <typename T>
class GarmentEncoderT {
public:
    GarmentEncoderConfig cfg;
    nn::ParamStore<T> params;

    explicit GarmentEncoderT(const GarmentEncoderConfig& c) : cfg(c) {
        cfg.validate();
        conv1_.init(params, "conv1", 3, cfg.width1, 3, 2, 1);
        conv2_.init(params, "conv2", cfg.width1, cfg.width2, 3, 2, 1);
        proj_.init(params, "proj", cfg.width2, cfg.feature_dim);
    }

    void init_weights(Rng& rng) {
        conv1_.init_weights(params, rng);
        conv2_.init_weights(params, rng);
        proj_.init_weights(params, rng);
    }

    // img must be RGB at cfg.resolution.
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> encode_mat(
        const Image& img) const;

    GarmentTokens encode(const Image& img) const {
        return GarmentTokens{encode_mat(img).template cast<double>()};
    }

    // Intermediate activations needed by the warm-up decoder's backward pass.
    struct Trace {
        nn::Mat<T> x0, h1, a1, h2, a2, pooled;
        int s1 = 0, s2 = 0;
    };
    nn::Mat<T> forward_trace(const Image& img, Trace& tr) const;
    // Backward through encode given d(tokens); accumulates into params.g.
    void backward(const Trace& tr, const nn::Mat<T>& d_tokens);

    nn::Conv2d<T> conv1_, conv2_;
    nn::Linear<T> proj_;
};

using GarmentEncoder = GarmentEncoderT<double>;

// Self-reconstruction warm-up: encoder -> small decoder -> pixel MSE.
// Returns per-step reconstruction losses; the decoder is discarded and the
// encoder parameters are left ready to freeze.
template <typename T>
std::vector<double> pretrain_warmup(GarmentEncoderT<T>& enc, const std::vector<Image>& garments,
                                    int steps, double lr, uint64_t seed);

uint64_t encoder_param_hash(const GarmentEncoder& enc);

}  // namespace tryon
