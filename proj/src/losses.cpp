#include "tryon/losses.hpp"

#include <cmath>

#include "tryon/common.hpp"

namespace tryon {

double ldm_loss(const Latent& eps, const Latent& eps_hat) {
    require(eps.same_shape(eps_hat), "ldm_loss: shape mismatch");
    require(eps.size() > 0, "ldm_loss: empty tensors");
    double acc = 0.0;
    for (size_t i = 0; i < eps.size(); ++i) {
        const double d = eps.v[i] - eps_hat.v[i];
        acc += d * d;
    }
    return acc / static_cast<double>(eps.size());
}

Mask resize_mask(const Mask& m, int h, int w) {
    require(h >= 1 && w >= 1 && h <= m.h && w <= m.w, "resize_mask: bad target size");
    require(m.h % h == 0 && m.w % w == 0, "resize_mask: non-integer scale factor");
    const int fy = m.h / h, fx = m.w / w;
    Mask out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int hits = 0;
            for (int yy = 0; yy < fy; ++yy)
                for (int xx = 0; xx < fx; ++xx) hits += m.at(y * fy + yy, x * fx + xx);
            out.at(y, x) = 2 * hits > fy * fx ? 1 : 0;
        }
    return out;
}

namespace {

// 1-M at the block's resolution, flattened in raster order.
Eigen::VectorXd outside_vector(const Mask& m, int h, int w) {
    const Mask ml = (m.h == h && m.w == w) ? m : resize_mask(m, h, w);
    Eigen::VectorXd c(static_cast<Eigen::Index>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            c[static_cast<Eigen::Index>(y) * w + x] = ml.at(y, x) ? 0.0 : 1.0;
    return c;
}

void check_record(const AttentionRecord& rec, const Mask& m) {
    require(!rec.empty(), "localization loss: empty attention record");
    for (uint8_t b : m.v) require(b == 0 || b == 1, "localization loss: mask must be binary");
}

constexpr double kTokenMassEps = 1e-12;

}  // namespace

double localization_loss(const AttentionRecord& rec, const Mask& m) {
    check_record(rec, m);
    double acc = 0.0;
    for (const auto& e : rec) {
        const Eigen::VectorXd c = outside_vector(m, e.h, e.w);
        const double npix = static_cast<double>(e.scores.rows());
        const double n = static_cast<double>(e.scores.cols());
        // (1/n) sum_k mean_pixels(A_k * (1-M))
        acc += (c.transpose() * e.scores).sum() / (n * npix);
    }
    return acc / static_cast<double>(rec.size());
}

std::vector<Eigen::MatrixXd> localization_loss_grad(const AttentionRecord& rec, const Mask& m) {
    check_record(rec, m);
    std::vector<Eigen::MatrixXd> grads;
    grads.reserve(rec.size());
    const double bshare = 1.0 / static_cast<double>(rec.size());
    for (const auto& e : rec) {
        const Eigen::VectorXd c = outside_vector(m, e.h, e.w);
        const double npix = static_cast<double>(e.scores.rows());
        const double n = static_cast<double>(e.scores.cols());
        Eigen::MatrixXd g = c.replicate(1, e.scores.cols()) * (bshare / (n * npix));
        grads.push_back(std::move(g));
    }
    return grads;
}

double token_localization_loss(const AttentionRecord& rec, const Mask& m) {
    check_record(rec, m);
    double acc = 0.0;
    for (const auto& e : rec) {
        const Eigen::VectorXd c = outside_vector(m, e.h, e.w);
        const Eigen::VectorXd mass = e.scores.colwise().sum().transpose();
        const Eigen::VectorXd outside = e.scores.transpose() * c;
        double block = 0.0;
        for (Eigen::Index k = 0; k < mass.size(); ++k)
            block += outside[k] / (mass[k] + kTokenMassEps);
        acc += block / static_cast<double>(mass.size());
    }
    return acc / static_cast<double>(rec.size());
}

std::vector<Eigen::MatrixXd> token_localization_loss_grad(const AttentionRecord& rec,
                                                          const Mask& m) {
    check_record(rec, m);
    std::vector<Eigen::MatrixXd> grads;
    grads.reserve(rec.size());
    const double bshare = 1.0 / static_cast<double>(rec.size());
    for (const auto& e : rec) {
        const Eigen::VectorXd c = outside_vector(m, e.h, e.w);
        const Eigen::VectorXd mass = e.scores.colwise().sum().transpose();
        const Eigen::VectorXd outside = e.scores.transpose() * c;
        const double n = static_cast<double>(e.scores.cols());
        // d/dA_ik of outside_k / mass_k = (c_i * mass_k - outside_k) / mass_k^2
        Eigen::MatrixXd g(e.scores.rows(), e.scores.cols());
        for (Eigen::Index k = 0; k < e.scores.cols(); ++k) {
            const double mk = mass[k] + kTokenMassEps;
            g.col(k) = ((c.array() * mk - outside[k]) / (mk * mk) * (bshare / n)).matrix();
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

LossBreakdown total_loss(double ldm, double ar, double lambda_ar) {
    require(std::isfinite(ldm) && std::isfinite(ar), "total_loss: non-finite inputs");
    require(lambda_ar >= 0.0, "total_loss: lambda_ar must be >= 0");
    LossBreakdown b;
    b.ldm = ldm;
    b.ar = ar;
    b.lambda_ar = lambda_ar;
    b.total = ldm + lambda_ar * ar;
    return b;
}

}  // namespace tryon
