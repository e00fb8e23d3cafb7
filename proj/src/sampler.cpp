#include "tryon/sampler.hpp"

#include <cmath>

#include "tryon/common.hpp"
#include "tryon/unet.hpp"

namespace tryon {

SampleMode sample_mode_from_name(const std::string& name) {
    if (name == "deterministic") return SampleMode::deterministic;
    if (name == "ancestral") return SampleMode::ancestral;
    throw ContractError("unknown sample mode: " + name);
}

std::string sample_mode_name(SampleMode m) {
    return m == SampleMode::deterministic ? "deterministic" : "ancestral";
}

Latent denoise_step(const Latent& z_t, int t, const Latent& eps_hat, const NoiseSchedule& sched,
                    SampleMode mode, const Latent* noise, int t_prev) {
    require(t >= 1 && t <= sched.T, "denoise_step: t out of range");
    if (t_prev < 0) t_prev = t - 1;
    require(t_prev < t, "denoise_step: t_prev must be < t");
    require(z_t.same_shape(eps_hat), "denoise_step: eps_hat shape mismatch");

    const double ab_t = sched.alpha_bar(t);
    const double ab_p = sched.alpha_bar(t_prev);
    const double inv_sqrt_ab = 1.0 / std::sqrt(ab_t);
    const double noise_coef = std::sqrt(1.0 - ab_t);

    double sigma2 = 0.0;
    if (mode == SampleMode::ancestral)
        sigma2 = (1.0 - ab_p) / (1.0 - ab_t) * (1.0 - ab_t / ab_p);
    const double dir = std::sqrt(std::max(1.0 - ab_p - sigma2, 0.0));
    const double sigma = std::sqrt(std::max(sigma2, 0.0));
    if (sigma > 0.0) {
        require(noise != nullptr, "denoise_step: ancestral mode needs injected noise");
        require(noise->same_shape(z_t), "denoise_step: noise shape mismatch");
    }

    Latent out(z_t.h, z_t.w, z_t.c);
    const double a = std::sqrt(ab_p);
    for (size_t i = 0; i < z_t.size(); ++i) {
        const double z0_hat = (z_t.v[i] - noise_coef * eps_hat.v[i]) * inv_sqrt_ab;
        out.v[i] = a * z0_hat + dir * eps_hat.v[i];
        if (sigma > 0.0) out.v[i] += sigma * noise->v[i];
    }
    return out;
}

std::vector<int> sample_timesteps(int T, int steps) {
    require(T >= 1 && steps >= 1, "sample_timesteps: T and steps must be >= 1");
    std::vector<int> ts;
    int prev = -1;
    for (int i = 0; i < steps; ++i) {
        const int t = static_cast<int>(
            std::lround(static_cast<double>(T) * (steps - i) / steps));
        const int clamped = std::max(1, std::min(T, t));
        if (clamped != prev) ts.push_back(clamped);
        prev = clamped;
    }
    return ts;
}

namespace {

struct InferState {
    TryOnUNet net;
    GarmentEncoder enc;
    Codec codec;
    NoiseSchedule sched;
};

InferState setup(const Checkpoint& ckpt) {
    require(!ckpt.unet_params.empty(), "try_on: checkpoint has no denoiser parameters");
    const auto& cfgj = ckpt.config;
    const Codec codec = Codec::from_name(cfgj.at("codec").get<std::string>());
    const NoiseSchedule sched =
        build_schedule(cfgj.at("T").get<int>(), cfgj.at("schedule_kind").get<std::string>(),
                       cfgj.at("beta_start").get<double>(), cfgj.at("beta_end").get<double>());
    return InferState{make_unet(ckpt), make_encoder(ckpt), codec, sched};
}

}  // namespace

Image try_on(const Checkpoint& ckpt, const Image& person, const Image& pose,
             const Image& garment, const InferOptions& opts) {
    InferState st = setup(ckpt);
    const int res = ckpt.config.at("resolution").get<int>();
    require(person.h == res && person.w == res && person.c == 3,
            "try_on: person image resolution mismatch");
    require(pose.h == res && pose.w == res, "try_on: pose map resolution mismatch");
    require(garment.h == res && garment.w == res, "try_on: garment image resolution mismatch");
    require(opts.steps >= 1, "try_on: steps must be >= 1");

    const GarmentTokens tokens = st.enc.encode(garment);
    const Latent source = encode(st.codec, person);
    const Latent pose_lat = encode(st.codec, pose);

    Rng rng(opts.seed);
    Latent z = gaussian_like(rng, source.h, source.w, source.c);
    if (opts.init == InferInit::noised_source) {
        Latent eps = z;
        z = forward_sample(source, st.sched.T, eps, st.sched);
    }

    const std::vector<int> ts = sample_timesteps(st.sched.T, opts.steps);
    GarmentTokens null_tokens;
    if (opts.guidance_scale != 0.0)
        null_tokens.tokens = Eigen::MatrixXd::Zero(tokens.l(), tokens.f());

    for (size_t i = 0; i < ts.size(); ++i) {
        const int t = ts[i];
        const int t_prev = i + 1 < ts.size() ? ts[i + 1] : 0;
        ConditioningBundle bundle{z, pose_lat, source};
        auto [eps_hat, rec] = predict_noise(st.net, bundle, t, tokens);
        if (opts.guidance_scale != 0.0) {
            auto [eps_null, rec2] = predict_noise(st.net, bundle, t, null_tokens);
            for (size_t k = 0; k < eps_hat.size(); ++k)
                eps_hat.v[k] = eps_null.v[k] + (1.0 + opts.guidance_scale) *
                                                   (eps_hat.v[k] - eps_null.v[k]);
        }
        if (opts.mode == SampleMode::ancestral && t_prev > 0) {
            Latent noise = gaussian_like(rng, z.h, z.w, z.c);
            z = denoise_step(z, t, eps_hat, st.sched, opts.mode, &noise, t_prev);
        } else {
            z = denoise_step(z, t, eps_hat, st.sched, SampleMode::deterministic, nullptr,
                             t_prev);
        }
    }
    return decode(st.codec, z);
}

Image multi_garment(const Checkpoint& ckpt, const Image& person, const Image& pose,
                    const std::vector<Image>& garments, const InferOptions& opts) {
    require(!garments.empty(), "multi_garment: need at least one garment");
    Image current = person;
    for (size_t i = 0; i < garments.size(); ++i) {
        InferOptions o = opts;
        o.seed = opts.seed + i;  // independent noise per stage, still deterministic
        current = try_on(ckpt, current, pose, garments[i], o);
    }
    return current;
}

}  // namespace tryon
