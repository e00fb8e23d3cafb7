#include <doctest.h>

#include <cmath>

#include "tryon/common.hpp"
#include "tryon/losses.hpp"
#include "tryon/rng.hpp"

using namespace tryon;

namespace {

AttentionRecord single_block(int h, int w, const Eigen::MatrixXd& scores) {
    return {{0, h, w, scores}};
}

}  // namespace

TEST_CASE("ldm_loss: zero at equality, one for unit offset") {
    Latent eps(3, 3, 2);
    Rng rng(5);
    for (double& v : eps.v) v = rng.normal();
    CHECK(ldm_loss(eps, eps) == 0.0);

    Latent zeros(3, 3, 2, 0.0), ones(3, 3, 2, 1.0);
    CHECK(ldm_loss(zeros, ones) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("ldm_loss: matches elementwise double-loop oracle") {
    Rng rng(17);
    Latent a(3, 3, 2), b(3, 3, 2);
    for (double& v : a.v) v = rng.normal();
    for (double& v : b.v) v = rng.normal();

    double acc = 0.0;  // naive oracle
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x)
            for (int c = 0; c < 2; ++c) {
                const double d = a.at(y, x, c) - b.at(y, x, c);
                acc += d * d;
            }
    const double oracle = acc / 18.0;
    CHECK(std::abs(ldm_loss(a, b) - oracle) < 1e-12);
}

TEST_CASE("ldm_loss: rejects shape mismatch") {
    Latent a(2, 2, 1), b(2, 3, 1);
    CHECK_THROWS_AS(ldm_loss(a, b), ContractError);
}

TEST_CASE("resize_mask: constants map to constants") {
    Mask ones(8, 8, 1), zeros(8, 8, 0);
    CHECK(resize_mask(ones, 4, 4).count() == 16);
    CHECK(resize_mask(ones, 2, 2).count() == 4);
    CHECK(resize_mask(zeros, 4, 4).count() == 0);
}

TEST_CASE("resize_mask: one quadrant survives pooling") {
    // 4x4 with one 2x2 quadrant set -> exactly one cell at 2x2
    Mask m(4, 4, 0);
    m.at(0, 0) = m.at(0, 1) = m.at(1, 0) = m.at(1, 1) = 1;
    const Mask r = resize_mask(m, 2, 2);
    CHECK(r.count() == 1);
    CHECK(r.at(0, 0) == 1);
}

TEST_CASE("resize_mask: majority threshold") {
    Mask m(2, 2, 0);
    m.at(0, 0) = 1;  // 1/4 of the cell -> not majority
    CHECK(resize_mask(m, 1, 1).at(0, 0) == 0);
    m.at(0, 1) = 1;  // 2/4 -> still not strict majority
    CHECK(resize_mask(m, 1, 1).at(0, 0) == 0);
    m.at(1, 0) = 1;  // 3/4 -> majority
    CHECK(resize_mask(m, 1, 1).at(0, 0) == 1);
}

TEST_CASE("resize_mask: rejects non-integer scale") {
    Mask m(6, 6, 1);
    CHECK_THROWS_AS(resize_mask(m, 4, 4), ContractError);
}

TEST_CASE("localization_loss: identities") {
    // row-stochastic 4-pixel x 3-token block
    Eigen::MatrixXd a(4, 3);
    a << 0.2, 0.3, 0.5, 0.1, 0.8, 0.1, 0.4, 0.4, 0.2, 0.25, 0.25, 0.5;

    SUBCASE("M all ones -> exactly 0") {
        CHECK(localization_loss(single_block(2, 2, a), Mask(2, 2, 1)) == 0.0);
    }
    SUBCASE("M all zeros -> exactly 1/n") {
        const double v = localization_loss(single_block(2, 2, a), Mask(2, 2, 0));
        CHECK(std::abs(v - 1.0 / 3.0) < 1e-15);
    }
}

TEST_CASE("localization_loss: hand evaluation, 2 pixels x 2 tokens") {
    Eigen::MatrixXd a(2, 2);
    a << 0.25, 0.75, 0.6, 0.4;
    Mask m(1, 2, 0);
    m.at(0, 0) = 1;  // M = [1, 0]
    // (1/2) * [mean(0, 0.6) + mean(0, 0.4)] = 0.25
    CHECK(localization_loss(single_block(1, 2, a), m) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("localization_loss: empty record rejected") {
    CHECK_THROWS_AS(localization_loss({}, Mask(2, 2, 1)), ContractError);
}

TEST_CASE("localization_loss: multi-block equal-weight average") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Constant(4, 2, 0.5);
    Eigen::MatrixXd b = Eigen::MatrixXd::Constant(16, 2, 0.5);
    AttentionRecord rec = {{0, 2, 2, a}, {1, 4, 4, b}};
    Mask m(4, 4, 0);
    // both blocks see all-zero masks: each contributes 1/n = 1/2
    CHECK(localization_loss(rec, m) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("token_localization_loss: zero iff no mass outside the mask") {
    Eigen::MatrixXd a(4, 2);
    a << 0.7, 0.3, 0.6, 0.4, 0.0, 0.0, 0.0, 0.0;
    Mask m(2, 2, 0);
    m.at(0, 0) = m.at(0, 1) = 1;  // top row is try-on; all mass sits there
    CHECK(token_localization_loss(single_block(2, 2, a), m) ==
          doctest::Approx(0.0).epsilon(1e-9));
    // moving any mass outside makes it positive
    a(2, 0) = 0.5;
    CHECK(token_localization_loss(single_block(2, 2, a), m) > 0.0);
    // with M all ones it is zero again
    CHECK(token_localization_loss(single_block(2, 2, a), Mask(2, 2, 1)) ==
          doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("localization gradients match finite differences on the score maps") {
    Rng rng(21);
    Eigen::MatrixXd logits(4, 3);
    for (int i = 0; i < logits.size(); ++i) logits.data()[i] = rng.normal();
    Mask m(2, 2, 0);
    m.at(0, 0) = 1;
    m.at(1, 1) = 1;

    auto softmax = [](Eigen::MatrixXd lg) {
        for (int r = 0; r < lg.rows(); ++r) {
            lg.row(r) = (lg.row(r).array() - lg.row(r).maxCoeff()).exp().matrix();
            lg.row(r) /= lg.row(r).sum();
        }
        return lg;
    };

    SUBCASE("token-normalized variant has a real softmax-level gradient") {
        auto loss = [&](const Eigen::MatrixXd& lg) {
            return token_localization_loss(single_block(2, 2, softmax(lg)), m);
        };
        // analytic: dL/dlogits via dL/dA and the softmax Jacobian
        const Eigen::MatrixXd A = softmax(logits);
        const auto dA = token_localization_loss_grad(single_block(2, 2, A), m);
        Eigen::MatrixXd dlog(4, 3);
        for (int r = 0; r < 4; ++r) {
            const double dot = A.row(r).dot(dA[0].row(r));
            dlog.row(r) = A.row(r).array() * (dA[0].row(r).array() - dot);
        }
        double max_rel = 0.0, max_abs_grad = 0.0;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 3; ++c) {
                Eigen::MatrixXd e = logits;
                const double h = 1e-6;
                e(r, c) += h;
                const double up = loss(e);
                e(r, c) -= 2 * h;
                const double dn = loss(e);
                const double fd = (up - dn) / (2 * h);
                const double denom = std::max({std::abs(fd), std::abs(dlog(r, c)), 1e-8});
                max_rel = std::max(max_rel, std::abs(fd - dlog(r, c)) / denom);
                max_abs_grad = std::max(max_abs_grad, std::abs(dlog(r, c)));
            }
        CHECK(max_rel < 1e-4);
        CHECK(max_abs_grad > 1e-4);  // the gradient is genuinely non-zero
    }

    SUBCASE("row-stochastic variant is constant along the softmax manifold") {
        // Eq-form value depends only on the mask once rows sum to one; its
        // softmax-level gradient must vanish, and finite differences agree.
        const Eigen::MatrixXd A = softmax(logits);
        const auto dA = localization_loss_grad(single_block(2, 2, A), m);
        for (int r = 0; r < 4; ++r) {
            const double dot = A.row(r).dot(dA[0].row(r));
            for (int c = 0; c < 3; ++c) {
                const double g = A(r, c) * (dA[0](r, c) - dot);
                CHECK(std::abs(g) < 1e-14);
            }
        }
        auto loss = [&](const Eigen::MatrixXd& lg) {
            return localization_loss(single_block(2, 2, softmax(lg)), m);
        };
        Eigen::MatrixXd e = logits;
        e(1, 2) += 1e-5;
        CHECK(std::abs(loss(e) - loss(logits)) < 1e-12);
    }
}

TEST_CASE("total_loss: exact linear combination") {
    SUBCASE("lambda 0 is the base arm") {
        const LossBreakdown b = total_loss(0.37, 0.9, 0.0);
        CHECK(b.total == 0.37);
    }
    SUBCASE("paper setting lambda=1") {
        const LossBreakdown b = total_loss(0.2, 0.05, 1.0);
        CHECK(b.total == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(b.total == b.ldm + b.lambda_ar * b.ar);  // exact identity
    }
    SUBCASE("doubling lambda doubles the excess") {
        const LossBreakdown b1 = total_loss(0.2, 0.07, 1.0);
        const LossBreakdown b2 = total_loss(0.2, 0.07, 2.0);
        CHECK(b2.total - b2.ldm == doctest::Approx(2.0 * (b1.total - b1.ldm)).epsilon(1e-15));
    }
    SUBCASE("rejects negative lambda and non-finite inputs") {
        CHECK_THROWS_AS(total_loss(0.1, 0.1, -1.0), ContractError);
        CHECK_THROWS_AS(total_loss(std::nan(""), 0.1, 1.0), ContractError);
    }
}
