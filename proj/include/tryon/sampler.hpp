#pragma once

#include <string>
#include <vector>

#include "tryon/checkpoint.hpp"
#include "tryon/codec.hpp"
#include "tryon/schedule.hpp"
#include "tryon/tensor.hpp"

namespace tryon {

enum class SampleMode { deterministic, ancestral };

SampleMode sample_mode_from_name(const std::string& name);
std::string sample_mode_name(SampleMode m);

// One reverse step from t to t_prev (default t-1), with the convention
// alpha_bar(0) = 1:
//   z0_hat  = (z_t - sqrt(1-ab_t) eps_hat) / sqrt(ab_t)
//   z_prev  = sqrt(ab_p) z0_hat + sqrt(1-ab_p-sigma^2) eps_hat + sigma * noise
// deterministic: sigma = 0. ancestral: sigma^2 = (1-ab_p)/(1-ab_t)*(1-ab_t/ab_p),
// which for t_prev = t-1 is the usual posterior variance; noise is injected.
Latent denoise_step(const Latent& z_t, int t, const Latent& eps_hat, const NoiseSchedule& sched,
                    SampleMode mode, const Latent* noise = nullptr, int t_prev = -1);

enum class InferInit { pure_noise, noised_source };

struct InferOptions {
    int steps = 50;
    SampleMode mode = SampleMode::deterministic;
    uint64_t seed = 0;
    InferInit init = InferInit::pure_noise;
    double guidance_scale = 0.0;  // 0 disables the hook
};

// Descending timestep subsequence T = t_0 > t_1 > ... > t_{k-1} >= 1 with k
// <= steps; the final transition targets t = 0.
std::vector<int> sample_timesteps(int T, int steps);

// Mask-free inference: {source person, pose map, garment} -> try-on image.
// There is deliberately no mask anywhere in this signature or path.
Image try_on(const Checkpoint& ckpt, const Image& person, const Image& pose,
             const Image& garment, const InferOptions& opts);

// Sequential multi-garment try-on: each output becomes the next source.
Image multi_garment(const Checkpoint& ckpt, const Image& person, const Image& pose,
                    const std::vector<Image>& garments, const InferOptions& opts);

}  // namespace tryon
