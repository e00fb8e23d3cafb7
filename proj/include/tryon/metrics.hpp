#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "tryon/tensor.hpp"

namespace tryon {

// Frozen random convolutional projector with global average pooling. Stands
// in for a pretrained feature network; absolute metric values are only
// comparable within one extractor id.
class FeatureExtractor {
public:
    FeatureExtractor(int resolution, int feature_dim, uint64_t seed);

    // One row per image, feature_dim columns.
    Eigen::MatrixXd extract(const std::vector<Image>& images) const;

    int feature_dim() const { return q_; }
    const std::string& id() const { return id_; }

private:
    int res_, q_;
    std::string id_;
    Eigen::MatrixXd w1_, w2_;  // conv kernels as (9*cin) x cout
    Eigen::VectorXd proj_b_;
    Eigen::MatrixXd proj_;
};

// Frechet distance between Gaussian fits:
//   |mu_x - mu_y|^2 + Tr(Sx + Sy - 2 (Sx^(1/2) Sy Sx^(1/2))^(1/2)).
// Covariances use 1/(m-1); the matrix square roots go through symmetric
// eigendecomposition with 1e-6 diagonal jitter.
double fid(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

// Unbiased squared MMD with kernel (x.y/q + 1)^degree, diagonal terms
// excluded, reported x100. Can be negative.
double kid(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int degree = 3);

// Bootstrap standard error of kid() under joint resampling with replacement.
double kid_bootstrap_se(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int rounds,
                        uint64_t seed, int degree = 3);

// Mean absolute pixel error over the masked (inside) or complementary region.
double region_mae(const Image& a, const Image& b, const Mask& m, bool inside);

}  // namespace tryon
