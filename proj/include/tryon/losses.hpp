#pragma once

#include <vector>

#include "tryon/attention_record.hpp"
#include "tryon/tensor.hpp"

namespace tryon {

struct LossBreakdown {
    double ldm = 0.0;
    double ar = 0.0;  // attention-localization term as used in the objective
    double total = 0.0;
    double lambda_ar = 0.0;
};

// Mean squared error over all elements.
double ldm_loss(const Latent& eps, const Latent& eps_hat);

// Area-average pooling followed by a 0.5 threshold. A cell must be majority
// try-on to stay in the try-on area. Scale factors must be integral.
Mask resize_mask(const Mask& m, int h, int w);

// Mean attention mass falling outside the try-on mask, averaged over tokens
// and blocks: per block (1/n) * sum_k mean_pixels(A_k * (1-M)). For
// row-stochastic score maps this reduces to a mask-area constant; it is kept
// as the reference definition and reported alongside the normalized variant.
double localization_loss(const AttentionRecord& rec, const Mask& m);

// Per-token-normalized outside-mask mass: each token's scores are first
// normalized into a distribution over pixels, then the mass on (1-M) is
// averaged over tokens and blocks. Zero iff no token places mass outside M;
// this is the variant with a usable gradient, used as the training
// regularizer.
double token_localization_loss(const AttentionRecord& rec, const Mask& m);

// Gradients of the two losses w.r.t. each recorded score map.
std::vector<Eigen::MatrixXd> localization_loss_grad(const AttentionRecord& rec, const Mask& m);
std::vector<Eigen::MatrixXd> token_localization_loss_grad(const AttentionRecord& rec,
                                                          const Mask& m);

// total = ldm + lambda_ar * ar, exactly.
LossBreakdown total_loss(double ldm, double ar, double lambda_ar);

}  // namespace tryon
