#include <doctest.h>

#include <cmath>

#include "tryon/common.hpp"
#include "tryon/sampler.hpp"

using namespace tryon;

TEST_CASE("denoise_step: recovers z0 from the exact forward noise") {
    const NoiseSchedule s = build_schedule(40, "linear", 1e-3, 0.05);
    Rng rng(3);
    Latent z0(4, 4, 3);
    for (double& v : z0.v) v = rng.uniform();

    for (int t : {1, 7, 23, 40}) {
        const Latent eps = gaussian_like(rng, 4, 4, 3);
        const Latent z_t = forward_sample(z0, t, eps, s);
        // single deterministic jump t -> 0 with the true eps inverts Eq. 1
        const Latent back = denoise_step(z_t, t, eps, s, SampleMode::deterministic, nullptr, 0);
        double max_err = 0.0;
        for (size_t i = 0; i < z0.size(); ++i)
            max_err = std::max(max_err, std::abs(back.v[i] - z0.v[i]));
        CHECK(max_err < 1e-10);
    }
}

TEST_CASE("denoise_step: t=1 deterministic returns the z0 estimate") {
    const NoiseSchedule s = build_schedule(10, "linear", 0.01, 0.1);
    Rng rng(5);
    Latent z_t(2, 2, 1), eps_hat(2, 2, 1);
    for (double& v : z_t.v) v = rng.normal();
    for (double& v : eps_hat.v) v = rng.normal();

    const Latent out = denoise_step(z_t, 1, eps_hat, s, SampleMode::deterministic);
    const double ab = s.alpha_bar(1);
    for (size_t i = 0; i < z_t.size(); ++i) {
        const double z0_hat = (z_t.v[i] - std::sqrt(1.0 - ab) * eps_hat.v[i]) / std::sqrt(ab);
        CHECK(out.v[i] == doctest::Approx(z0_hat).epsilon(1e-12));
    }
}

TEST_CASE("denoise_step: matches an independent scalar re-implementation") {
    const NoiseSchedule s = build_schedule(30, "linear", 2e-3, 0.04);
    Rng rng(7);
    Latent z_t(2, 3, 2), eps_hat(2, 3, 2), noise(2, 3, 2);
    for (double& v : z_t.v) v = rng.normal();
    for (double& v : eps_hat.v) v = rng.normal();
    for (double& v : noise.v) v = rng.normal();
    const int t = 17, t_prev = 9;

    SUBCASE("deterministic") {
        const Latent out =
            denoise_step(z_t, t, eps_hat, s, SampleMode::deterministic, nullptr, t_prev);
        // scalar oracle, separate arithmetic path
        const double ab_t = s.alpha_bar(t), ab_p = s.alpha_bar(t_prev);
        for (size_t i = 0; i < z_t.size(); ++i) {
            const double z0 = (z_t.v[i] - std::sqrt(1.0 - ab_t) * eps_hat.v[i]) / std::sqrt(ab_t);
            const double want = std::sqrt(ab_p) * z0 + std::sqrt(1.0 - ab_p) * eps_hat.v[i];
            CHECK(std::abs(out.v[i] - want) < 1e-10);
        }
    }
    SUBCASE("ancestral adds the posterior noise term") {
        const Latent out =
            denoise_step(z_t, t, eps_hat, s, SampleMode::ancestral, &noise, t_prev);
        const double ab_t = s.alpha_bar(t), ab_p = s.alpha_bar(t_prev);
        const double sigma2 = (1.0 - ab_p) / (1.0 - ab_t) * (1.0 - ab_t / ab_p);
        for (size_t i = 0; i < z_t.size(); ++i) {
            const double z0 = (z_t.v[i] - std::sqrt(1.0 - ab_t) * eps_hat.v[i]) / std::sqrt(ab_t);
            const double want = std::sqrt(ab_p) * z0 +
                                std::sqrt(1.0 - ab_p - sigma2) * eps_hat.v[i] +
                                std::sqrt(sigma2) * noise.v[i];
            CHECK(std::abs(out.v[i] - want) < 1e-10);
        }
    }
    SUBCASE("ancestral single-step variance equals the DDPM posterior variance") {
        const double ab_t = s.alpha_bar(t), ab_p = s.alpha_bar(t - 1);
        const double sigma2 = (1.0 - ab_p) / (1.0 - ab_t) * (1.0 - ab_t / ab_p);
        const double beta_tilde = (1.0 - ab_p) / (1.0 - ab_t) * s.beta(t);
        CHECK(sigma2 == doctest::Approx(beta_tilde).epsilon(1e-12));
    }
}

TEST_CASE("denoise_step: full deterministic trajectory reaches z0 with oracle eps") {
    // with eps_hat == the eps used in the forward draw, every step's z0
    // estimate is exact, so the trajectory from any t lands on z0
    const NoiseSchedule s = build_schedule(25, "linear", 1e-3, 0.06);
    Rng rng(11);
    Latent z0(3, 3, 3);
    for (double& v : z0.v) v = rng.uniform();
    const Latent eps = gaussian_like(rng, 3, 3, 3);

    Latent z = forward_sample(z0, 25, eps, s);
    for (int t = 25; t >= 1; --t) z = denoise_step(z, t, eps, s, SampleMode::deterministic);
    double max_err = 0.0;
    for (size_t i = 0; i < z0.size(); ++i)
        max_err = std::max(max_err, std::abs(z.v[i] - z0.v[i]));
    CHECK(max_err < 1e-6);
}

TEST_CASE("denoise_step: contract errors") {
    const NoiseSchedule s = build_schedule(10, "linear", 0.01, 0.1);
    Latent z(2, 2, 1, 0.5), e(2, 2, 1, 0.1), wrong(2, 3, 1, 0.1);
    CHECK_THROWS_AS(denoise_step(z, 0, e, s, SampleMode::deterministic), ContractError);
    CHECK_THROWS_AS(denoise_step(z, 11, e, s, SampleMode::deterministic), ContractError);
    CHECK_THROWS_AS(denoise_step(z, 5, wrong, s, SampleMode::deterministic), ContractError);
    CHECK_THROWS_AS(denoise_step(z, 5, e, s, SampleMode::ancestral, nullptr), ContractError);
}

TEST_CASE("sample_timesteps: descending, within range, correct endpoints") {
    for (int T : {10, 200, 1000}) {
        for (int steps : {1, 5, 50}) {
            const std::vector<int> ts = sample_timesteps(T, steps);
            REQUIRE(!ts.empty());
            CHECK(ts.front() == T);
            for (size_t i = 1; i < ts.size(); ++i) CHECK(ts[i] < ts[i - 1]);
            CHECK(ts.back() >= 1);
            CHECK(static_cast<int>(ts.size()) <= steps);
        }
    }
    const std::vector<int> all = sample_timesteps(8, 8);
    CHECK(all == std::vector<int>{8, 7, 6, 5, 4, 3, 2, 1});
}
