#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "tryon/nn.hpp"
#include "tryon/rng.hpp"

using namespace tryon;
using nn::Mat;

namespace {

Mat<double> randn(Rng& rng, Eigen::Index r, Eigen::Index c, double s = 1.0) {
    Mat<double> m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = s * rng.normal();
    return m;
}

}  // namespace

TEST_CASE("conv2d: gradients match finite differences (stride 1 and 2)") {
    for (int stride : {1, 2}) {
        Rng rng(100 + stride);
        nn::ParamStore<double> ps;
        nn::Conv2d<double> conv;
        conv.init(ps, "c", 3, 4, 3, stride, 1);
        conv.init_weights(ps, rng);
        const int h = 6, w = 6;
        const Mat<double> x = randn(rng, h * w, 3);
        const Mat<double> target = randn(rng, (h / stride) * (w / stride), 4);

        auto loss = [&](bool backward) {
            Mat<double> y = conv.forward(ps, x, h, w);
            Mat<double> diff = y - target;
            if (backward) conv.backward(ps, x, h, w, diff * (2.0 / diff.size()));
            return diff.squaredNorm() / diff.size();
        };
        const auto res = check_gradients(ps, loss);
        CHECK(res.max_rel_err < 1e-6);
        CHECK(res.max_abs_grad > 1e-4);
    }
}

TEST_CASE("groupnorm: gradients match finite differences") {
    Rng rng(7);
    nn::ParamStore<double> ps;
    nn::GroupNorm<double> gn;
    gn.init(ps, "g", 6, 3);
    gn.init_weights(ps);
    for (Eigen::Index i = 0; i < 6; ++i) {
        ps.w(gn.g_idx)(0, i) = 1.0 + 0.2 * rng.normal();
        ps.w(gn.b_idx)(0, i) = 0.1 * rng.normal();
    }
    const Mat<double> x = randn(rng, 10, 6);
    const Mat<double> target = randn(rng, 10, 6);

    typename nn::GroupNorm<double>::Stats st;
    auto loss = [&](bool backward) {
        Mat<double> y = gn.forward(ps, x, st);
        Mat<double> diff = y - target;
        if (backward) gn.backward(ps, st, diff * (2.0 / diff.size()));
        return diff.squaredNorm() / diff.size();
    };
    const auto res = check_gradients(ps, loss);
    CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("groupnorm: normalizes per group") {
    Rng rng(9);
    nn::ParamStore<double> ps;
    nn::GroupNorm<double> gn;
    gn.init(ps, "g", 4, 2);
    gn.init_weights(ps);
    const Mat<double> x = randn(rng, 50, 4, 3.0);
    typename nn::GroupNorm<double>::Stats st;
    const Mat<double> y = gn.forward(ps, x, st);
    for (int g = 0; g < 2; ++g) {
        const auto block = y.block(0, 2 * g, 50, 2);
        CHECK(std::abs(block.mean()) < 1e-10);
        CHECK((block.array() - block.mean()).square().mean() ==
              doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("silu backward matches finite differences") {
    Rng rng(11);
    const Mat<double> x = randn(rng, 4, 5);
    const Mat<double> dy = randn(rng, 4, 5);
    const Mat<double> dx = nn::silu_backward(x, dy);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Mat<double> xp = x, xm = x;
        xp.data()[i] += 1e-6;
        xm.data()[i] -= 1e-6;
        const double fd = ((nn::silu(xp) - nn::silu(xm)).cwiseProduct(dy)).sum() / 2e-6;
        CHECK(dx.data()[i] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("softmax rows: shift invariance to 1e-9") {
    Rng rng(13);
    Mat<double> a = randn(rng, 6, 5);
    Mat<double> b = a;
    for (Eigen::Index r = 0; r < b.rows(); ++r) b.row(r).array() += 37.5;
    nn::softmax_rows(a);
    nn::softmax_rows(b);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        CHECK(a.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("attention core: zero query gives uniform rows") {
    Rng rng(15);
    const Mat<double> p = Mat<double>::Zero(3, 4);
    const Mat<double> tokens = randn(rng, 5, 4);
    const Mat<double> wq = randn(rng, 4, 4);
    const Mat<double> wk = randn(rng, 4, 4);
    const Mat<double> wv = randn(rng, 4, 4);
    nn::AttentionCoreTrace<double> tr;
    nn::attention_core_forward(p, tokens, wq, wk, wv, 2, tr);
    for (const auto& head : tr.heads)
        for (Eigen::Index i = 0; i < head.size(); ++i)
            CHECK(head.data()[i] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("attention core: single token attends fully") {
    Rng rng(16);
    const Mat<double> p = randn(rng, 3, 4);
    const Mat<double> tokens = randn(rng, 1, 4);
    const Mat<double> wq = randn(rng, 4, 2), wk = randn(rng, 4, 2), wv = randn(rng, 4, 2);
    nn::AttentionCoreTrace<double> tr;
    const Mat<double> out = nn::attention_core_forward(p, tokens, wq, wk, wv, 1, tr);
    for (Eigen::Index i = 0; i < tr.heads[0].size(); ++i) CHECK(tr.heads[0].data()[i] == 1.0);
    const Mat<double> v = tokens * wv;
    for (Eigen::Index r = 0; r < out.rows(); ++r)
        CHECK((out.row(r) - v.row(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("attention core: hand-computed 2x2 softmax oracle") {
    // Weights chosen so the scaled logits are [[0, ln2], [ln2, 0]]:
    // p = I, wq carries the logits (d=2, scale 1/sqrt(2)), tokens = I,
    // wk = sqrt(2) I folds the scale back out.
    const double ln2 = std::log(2.0);
    Mat<double> p = Mat<double>::Identity(2, 2);
    Mat<double> tokens = Mat<double>::Identity(2, 2);
    Mat<double> wq(2, 2);
    wq << 0.0, ln2, ln2, 0.0;
    Mat<double> wk = std::sqrt(2.0) * Mat<double>::Identity(2, 2);
    Mat<double> wv = Mat<double>::Identity(2, 2);

    nn::AttentionCoreTrace<double> tr;
    nn::attention_core_forward(p, tokens, wq, wk, wv, 1, tr);
    // softmax([0, ln2]) = [1/3, 2/3] by hand
    const Mat<double>& a = tr.heads[0];
    CHECK(a(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(a(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(a(1, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(a(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("attention core: dimension mismatches rejected") {
    Rng rng(17);
    const Mat<double> p = randn(rng, 3, 4);
    const Mat<double> tokens = randn(rng, 5, 6);
    const Mat<double> wq = randn(rng, 4, 4);
    const Mat<double> wk_bad = randn(rng, 4, 4);  // token dim is 6
    const Mat<double> wv = randn(rng, 6, 4);
    nn::AttentionCoreTrace<double> tr;
    CHECK_THROWS_AS(nn::attention_core_forward(p, tokens, wq, wk_bad, wv, 2, tr), ContractError);
    const Mat<double> wk = randn(rng, 6, 4);
    CHECK_THROWS_AS(nn::attention_core_forward(p, tokens, wq, wk, wv, 3, tr), ContractError);
}

TEST_CASE("attention core: full backward matches finite differences") {
    Rng rng(19);
    const int n = 4, f = 5, ftok = 3, d = 4, heads = 2, l = 6;
    const Mat<double> p0 = randn(rng, n, f);
    const Mat<double> tokens0 = randn(rng, l, ftok);
    nn::ParamStore<double> ps;
    const int iq = ps.add("wq", f, d), ik = ps.add("wk", ftok, d), iv = ps.add("wv", ftok, d);
    ps.w(iq) = randn(rng, f, d);
    ps.w(ik) = randn(rng, ftok, d);
    ps.w(iv) = randn(rng, ftok, d);
    const Mat<double> probe = randn(rng, n, d);        // random linear readout
    const Mat<double> score_probe = randn(rng, n, l);  // probe on the mean score map

    auto loss = [&](bool backward) {
        nn::AttentionCoreTrace<double> tr;
        const Mat<double> out =
            nn::attention_core_forward(p0, tokens0, ps.w(iq), ps.w(ik), ps.w(iv), heads, tr);
        Mat<double> mean_scores = tr.heads[0];
        for (size_t h = 1; h < tr.heads.size(); ++h) mean_scores += tr.heads[h];
        mean_scores /= static_cast<double>(heads);
        const double val =
            out.cwiseProduct(probe).sum() + mean_scores.cwiseProduct(score_probe).sum();
        if (backward) {
            Mat<double> dp, dwq, dwk, dwv;
            nn::attention_core_backward(p0, tokens0, ps.w(iq), ps.w(ik), ps.w(iv), heads, tr,
                                        probe, &score_probe, dp, dwq, dwk, dwv);
            ps.g(iq) += dwq;
            ps.g(ik) += dwk;
            ps.g(iv) += dwv;
        }
        return val;
    };
    const auto res = check_gradients(ps, loss, 1e-6);
    CHECK(res.max_rel_err < 1e-6);
    CHECK(res.max_abs_grad > 1e-3);
}

TEST_CASE("timestep embedding: endpoints and scalar oracle") {
    SUBCASE("t=0: sin parts 0, cos parts 1") {
        const Mat<double> e = nn::timestep_embedding<double>(0, 8);
        for (int i = 0; i < 4; ++i) {
            CHECK(e(0, i) == 0.0);
            CHECK(e(0, 4 + i) == 1.0);
        }
    }
    SUBCASE("deterministic") {
        const Mat<double> a = nn::timestep_embedding<double>(123, 16);
        const Mat<double> b = nn::timestep_embedding<double>(123, 16);
        CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("t=1, dim=4 matches independent scalar evaluation") {
        const Mat<double> e = nn::timestep_embedding<double>(1, 4);
        // frequencies are 10000^(-i/2) for i in {0, 1}
        CHECK(e(0, 0) == doctest::Approx(std::sin(1.0)).epsilon(1e-15));
        CHECK(e(0, 1) == doctest::Approx(std::sin(0.01)).epsilon(1e-15));
        CHECK(e(0, 2) == doctest::Approx(std::cos(1.0)).epsilon(1e-15));
        CHECK(e(0, 3) == doctest::Approx(std::cos(0.01)).epsilon(1e-15));
    }
    SUBCASE("odd dim rejected") {
        CHECK_THROWS_AS(nn::timestep_embedding<double>(1, 5), ContractError);
    }
}

TEST_CASE("upsample/avgpool: adjoint identities") {
    Rng rng(23);
    const Mat<double> x = randn(rng, 4 * 4, 3);
    const Mat<double> up = nn::upsample2_nearest(x, 4, 4);
    CHECK(up.rows() == 64);
    const Mat<double> y = randn(rng, 8 * 8, 3);
    const double lhs = up.cwiseProduct(y).sum();
    const double rhs = x.cwiseProduct(nn::upsample2_nearest_backward(y, 4, 4)).sum();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

    const Mat<double> pooled = nn::avgpool(x, 4, 4, 2);
    CHECK(pooled.rows() == 4);
    const Mat<double> z = randn(rng, 4, 3);
    const double l2 = pooled.cwiseProduct(z).sum();
    const double r2 = x.cwiseProduct(nn::avgpool_backward(z, 4, 4, 2)).sum();
    CHECK(l2 == doctest::Approx(r2).epsilon(1e-12));
}

TEST_CASE("adam: converges on a quadratic") {
    nn::ParamStore<double> ps;
    const int idx = ps.add("w", 1, 3);
    ps.w(idx) << 5.0, -3.0, 2.0;
    nn::Adam<double> opt;
    opt.lr = 0.1;
    opt.init(ps);
    for (int i = 0; i < 500; ++i) {
        ps.zero_grad();
        ps.g(idx) = 2.0 * ps.w(idx);
        opt.step(ps);
    }
    CHECK(ps.w(idx).cwiseAbs().maxCoeff() < 1e-3);
}
