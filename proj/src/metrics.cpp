#include "tryon/metrics.hpp"

#include <cmath>

#include "tryon/common.hpp"
#include "tryon/convert.hpp"
#include "tryon/nn.hpp"
#include "tryon/rng.hpp"

namespace tryon {

FeatureExtractor::FeatureExtractor(int resolution, int feature_dim, uint64_t seed)
    : res_(resolution), q_(feature_dim) {
    require(resolution % 4 == 0, "feature extractor: resolution must be divisible by 4");
    id_ = "rconv2-q" + std::to_string(q_) + "-s" + std::to_string(seed) + "-r" +
          std::to_string(resolution);
    Rng rng(seed);
    const int c1 = 12, c2 = 24;
    auto fill = [&rng](Eigen::MatrixXd& mat, Eigen::Index rows, Eigen::Index cols, double std) {
        mat.resize(rows, cols);
        for (Eigen::Index i = 0; i < mat.size(); ++i) mat.data()[i] = std * rng.normal();
    };
    fill(w1_, 9 * 3, c1, std::sqrt(2.0 / (9 * 3)));
    fill(w2_, 9 * c1, c2, std::sqrt(2.0 / (9.0 * c1)));
    fill(proj_, c2, q_, std::sqrt(1.0 / c2));
    proj_b_.resize(q_);
    for (Eigen::Index i = 0; i < q_; ++i) proj_b_[i] = 0.1 * rng.normal();
}

Eigen::MatrixXd FeatureExtractor::extract(const std::vector<Image>& images) const {
    require(!images.empty(), "extract_features: empty image list");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(images.size()), q_);
    for (size_t i = 0; i < images.size(); ++i) {
        const Image& img = images[i];
        require(img.c == 3, "extract_features: images must be RGB");
        require(img.h == res_ && img.w == res_, "extract_features: resolution mismatch");
        nn::Mat<double> x = to_mat<double>(img);
        nn::Mat<double> cols;
        nn::im2col(x, res_, res_, 3, 2, 1, cols);
        nn::Mat<double> h1 = (cols * w1_).cwiseMax(0.0);
        const int r1 = res_ / 2;
        nn::im2col(h1, r1, r1, 3, 2, 1, cols);
        nn::Mat<double> h2 = (cols * w2_).cwiseMax(0.0);
        Eigen::RowVectorXd pooled = h2.colwise().mean();
        out.row(static_cast<Eigen::Index>(i)) = pooled * proj_ + proj_b_.transpose();
    }
    return out;
}

namespace {

// Symmetric PSD square root via eigendecomposition; negative eigenvalues from
// roundoff are clamped to zero.
Eigen::MatrixXd sqrtm_spd(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

constexpr double kJitter = 1e-6;

void check_features(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    require(x.rows() >= 2 && y.rows() >= 2, "metric: need at least 2 samples per side");
    require(x.cols() == y.cols(), "metric: feature dims differ");
}

}  // namespace

double fid(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    check_features(x, y);
    const Eigen::RowVectorXd mu_x = x.colwise().mean();
    const Eigen::RowVectorXd mu_y = y.colwise().mean();
    const Eigen::MatrixXd xc = x.rowwise() - mu_x;
    const Eigen::MatrixXd yc = y.rowwise() - mu_y;
    Eigen::MatrixXd sx = xc.transpose() * xc / static_cast<double>(x.rows() - 1);
    Eigen::MatrixXd sy = yc.transpose() * yc / static_cast<double>(y.rows() - 1);
    sx.diagonal().array() += kJitter;
    sy.diagonal().array() += kJitter;

    const Eigen::MatrixXd rx = sqrtm_spd(sx);
    Eigen::MatrixXd inner = rx * sy * rx;
    inner = 0.5 * (inner + inner.transpose());  // symmetrize roundoff
    const double tr_cross = sqrtm_spd(inner).trace();

    const double mean_term = (mu_x - mu_y).squaredNorm();
    return mean_term + sx.trace() + sy.trace() - 2.0 * tr_cross;
}

double kid(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int degree) {
    check_features(x, y);
    const double q = static_cast<double>(x.cols());
    const double m = static_cast<double>(x.rows());
    const double n = static_cast<double>(y.rows());

    auto kernel = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        Eigen::MatrixXd k = (a * b.transpose() / q).array() + 1.0;
        Eigen::MatrixXd kd = k;
        for (int d = 1; d < degree; ++d) kd = kd.cwiseProduct(k);
        return kd;
    };

    const Eigen::MatrixXd kxx = kernel(x, x);
    const Eigen::MatrixXd kyy = kernel(y, y);
    const Eigen::MatrixXd kxy = kernel(x, y);

    const double sum_xx = kxx.sum() - kxx.trace();
    const double sum_yy = kyy.sum() - kyy.trace();
    const double mmd2 = sum_xx / (m * (m - 1.0)) + sum_yy / (n * (n - 1.0)) -
                        2.0 * kxy.mean();
    return 100.0 * mmd2;
}

double kid_bootstrap_se(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int rounds,
                        uint64_t seed, int degree) {
    check_features(x, y);
    require(rounds >= 2, "kid_bootstrap_se: need >= 2 rounds");
    Rng rng(seed);
    std::vector<double> vals(static_cast<size_t>(rounds));
    Eigen::MatrixXd bx(x.rows(), x.cols()), by(y.rows(), y.cols());
    for (int r = 0; r < rounds; ++r) {
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            bx.row(i) = x.row(rng.uniform_int(0, x.rows() - 1));
        for (Eigen::Index i = 0; i < y.rows(); ++i)
            by.row(i) = y.row(rng.uniform_int(0, y.rows() - 1));
        vals[static_cast<size_t>(r)] = kid(bx, by, degree);
    }
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= rounds;
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= (rounds - 1);
    return std::sqrt(var);
}

double region_mae(const Image& a, const Image& b, const Mask& m, bool inside) {
    require(a.same_shape(b), "region_mae: image shapes differ");
    require(a.h == m.h && a.w == m.w, "region_mae: mask resolution mismatch");
    double acc = 0.0;
    size_t count = 0;
    for (int y = 0; y < a.h; ++y)
        for (int x = 0; x < a.w; ++x) {
            if ((m.at(y, x) != 0) != inside) continue;
            for (int ch = 0; ch < a.c; ++ch) acc += std::abs(a.at(y, x, ch) - b.at(y, x, ch));
            ++count;
        }
    require(count > 0, "region_mae: empty region");
    return acc / (static_cast<double>(count) * a.c);
}

}  // namespace tryon
