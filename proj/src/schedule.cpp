#include "tryon/schedule.hpp"

#include <cmath>

#include "tryon/common.hpp"

namespace tryon {

NoiseSchedule build_schedule(int T, const std::string& kind, double beta_start, double beta_end) {
    require(T >= 1, "build_schedule: T must be >= 1");
    require(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end,
            "build_schedule: need 0 < beta_start <= beta_end < 1");
    require(kind == "linear", "build_schedule: unknown schedule kind '" + kind + "'");

    NoiseSchedule s;
    s.T = T;
    s.betas.resize(static_cast<size_t>(T));
    s.alphas.resize(static_cast<size_t>(T));
    s.alpha_bars.resize(static_cast<size_t>(T));
    double prod = 1.0;
    for (int t = 0; t < T; ++t) {
        const double frac = T == 1 ? 0.0 : static_cast<double>(t) / (T - 1);
        const double beta = beta_start + (beta_end - beta_start) * frac;
        s.betas[static_cast<size_t>(t)] = beta;
        s.alphas[static_cast<size_t>(t)] = 1.0 - beta;
        prod *= 1.0 - beta;
        s.alpha_bars[static_cast<size_t>(t)] = prod;
    }
    return s;
}

Latent forward_sample(const Latent& z0, int t, const Latent& eps, const NoiseSchedule& sched) {
    require(t >= 1 && t <= sched.T, "forward_sample: t out of range");
    require(z0.same_shape(eps), "forward_sample: eps shape must match z0");

    const double ab = sched.alpha_bar(t);
    const double cs = std::sqrt(ab);
    const double cn = std::sqrt(1.0 - ab);
    Latent zt(z0.h, z0.w, z0.c);
    for (size_t i = 0; i < z0.size(); ++i) zt.v[i] = cs * z0.v[i] + cn * eps.v[i];
    return zt;
}

int sample_timestep(Rng& rng, int T) {
    require(T >= 1, "sample_timestep: T must be >= 1");
    return static_cast<int>(rng.uniform_int(1, T));
}

Latent gaussian_like(Rng& rng, int h, int w, int c) {
    Latent z(h, w, c);
    for (double& x : z.v) x = rng.normal();
    return z;
}

}  // namespace tryon
