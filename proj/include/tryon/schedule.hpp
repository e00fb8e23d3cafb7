#pragma once

#include <string>
#include <vector>

#include "tryon/rng.hpp"
#include "tryon/tensor.hpp"

namespace tryon {

// Variance schedule of the forward diffusion process.
// alpha_t = 1 - beta_t, alpha_bar_t = prod_{s<=t} alpha_s; indices are 1-based
// with the convention alpha_bar(0) = 1.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> betas;       // betas[t-1] = beta_t
    std::vector<double> alphas;      // alphas[t-1] = alpha_t
    std::vector<double> alpha_bars;  // alpha_bars[t-1] = alpha_bar_t

    double beta(int t) const { return betas.at(static_cast<size_t>(t - 1)); }
    double alpha(int t) const { return alphas.at(static_cast<size_t>(t - 1)); }
    double alpha_bar(int t) const {
        return t == 0 ? 1.0 : alpha_bars.at(static_cast<size_t>(t - 1));
    }
};

// kind: "linear" interpolates beta from beta_start to beta_end inclusive.
NoiseSchedule build_schedule(int T, const std::string& kind, double beta_start, double beta_end);

// Reparameterized draw from q(z_t | z_0):
//   sqrt(alpha_bar_t) * z0 + sqrt(1 - alpha_bar_t) * eps.
// eps is injected by the caller so every stochastic path is replayable.
Latent forward_sample(const Latent& z0, int t, const Latent& eps, const NoiseSchedule& sched);

// Uniform timestep in [1, T].
int sample_timestep(Rng& rng, int T);

// Gaussian latent of the given shape drawn from rng.
Latent gaussian_like(Rng& rng, int h, int w, int c);

}  // namespace tryon
