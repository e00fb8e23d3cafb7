#include "tryon/evaluate.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "tryon/codec.hpp"
#include "tryon/convert.hpp"
#include "tryon/losses.hpp"
#include "tryon/png_io.hpp"
#include "tryon/schedule.hpp"

namespace fs = std::filesystem;

namespace tryon {

nlohmann::json evaluate_image_sets(const std::vector<Image>& real,
                                   const std::vector<Image>& generated, int feature_dim,
                                   uint64_t extractor_seed, int kid_bootstrap,
                                   uint64_t kid_seed) {
    require(!real.empty() && !generated.empty(), "evaluate: empty image set");
    require(real[0].h == generated[0].h && real[0].w == generated[0].w,
            "evaluate: image set resolution mismatch");
    FeatureExtractor ex(real[0].h, feature_dim, extractor_seed);
    const Eigen::MatrixXd fx = ex.extract(real);
    const Eigen::MatrixXd fy = ex.extract(generated);
    nlohmann::json j;
    j["fid"] = fid(fx, fy);
    j["kid"] = kid(fx, fy);
    j["kid_bootstrap_se"] = kid_bootstrap_se(fx, fy, kid_bootstrap, kid_seed);
    j["extractor_id"] = ex.id();
    j["kernel"] = {{"kind", "polynomial"}, {"degree", 3}, {"scale", "1/q"}, {"offset", 1.0}};
    j["real_count"] = real.size();
    j["generated_count"] = generated.size();
    return j;
}

namespace {

// Next test index wearing the same slot, skipping self; garments must come
// from other samples for the evaluation to be unpaired.
size_t unpaired_partner(const std::vector<TryOnTriplet>& set, size_t i) {
    const size_t n = set.size();
    for (size_t k = 1; k < n; ++k) {
        const size_t j = (i + k) % n;
        if (set[j].slot == set[i].slot && !(set[j].garment == set[i].garment)) return j;
    }
    return (i + 1) % n;  // degenerate split; still unpaired
}

}  // namespace

nlohmann::json evaluate(const Checkpoint& ckpt, const EvalConfig& cfg) {
    const DatasetManifest manifest = load_manifest(cfg.test_dataset);
    const auto test_recs = manifest.split("test");
    require(!test_recs.empty(), "evaluate: dataset has no test split");

    std::vector<TryOnTriplet> test;
    test.reserve(test_recs.size());
    for (const auto* r : test_recs) test.push_back(load_triplet(cfg.test_dataset, *r));

    const int res = ckpt.config.at("resolution").get<int>();
    require(manifest.config.resolution == res, "evaluate: dataset/checkpoint resolution mismatch");

    // ---- generation (or reuse) ----
    std::vector<Image> generated(test.size());
    if (!cfg.generated_dir.empty()) {
        for (size_t i = 0; i < test.size(); ++i)
            generated[i] =
                read_png((fs::path(cfg.generated_dir) / (test[i].id + ".png")).string());
    } else {
        for (size_t i = 0; i < test.size(); ++i) {
            const size_t j = unpaired_partner(test, i);
            InferOptions opts;
            opts.steps = cfg.sample_steps;
            opts.mode = cfg.mode;
            opts.seed = detail::splitmix64_once(cfg.seed ^ (0xABCD0000ull + i));
            generated[i] = try_on(ckpt, test[i].p_prime, test[i].pose, test[j].garment, opts);
        }
        if (!cfg.dump_dir.empty()) {
            fs::create_directories(cfg.dump_dir);
            for (size_t i = 0; i < test.size(); ++i)
                write_png((fs::path(cfg.dump_dir) / (test[i].id + ".png")).string(),
                          generated[i]);
        }
    }

    // ---- distribution metrics vs the real test images ----
    std::vector<Image> real;
    real.reserve(test.size());
    for (const auto& t : test) real.push_back(t.p);
    nlohmann::json j = evaluate_image_sets(real, generated, cfg.feature_dim, cfg.extractor_seed,
                                           cfg.kid_bootstrap, cfg.seed ^ 0xB007ull);

    // ---- region preservation vs the source person ----
    double inside_acc = 0.0, outside_acc = 0.0;
    int preserved = 0;
    double occl_acc = 0.0;
    int occl_count = 0;
    for (size_t i = 0; i < test.size(); ++i) {
        const double inside = region_mae(generated[i], test[i].p_prime, test[i].m, true);
        const double outside = region_mae(generated[i], test[i].p_prime, test[i].m, false);
        inside_acc += inside;
        outside_acc += outside;
        if (outside < inside) ++preserved;

        if (test[i].aug && test[i].aug->has_foreground) {
            const Image fg = render_foreground(test[i].aug->fg, res, res);
            double acc = 0.0;
            size_t count = 0;
            for (int y = 0; y < res; ++y)
                for (int x = 0; x < res; ++x) {
                    if (fg.at(y, x, 3) != 1.0) continue;
                    for (int ch = 0; ch < 3; ++ch)
                        acc += std::abs(generated[i].at(y, x, ch) -
                                        test[i].p_prime.at(y, x, ch));
                    count += 3;
                }
            if (count > 0) {
                occl_acc += acc / static_cast<double>(count);
                ++occl_count;
            }
        }
    }
    j["inside_mae"] = inside_acc / static_cast<double>(test.size());
    j["outside_mae"] = outside_acc / static_cast<double>(test.size());
    j["outside_lt_inside_frac"] = static_cast<double>(preserved) / static_cast<double>(test.size());
    j["occluder_mae"] = occl_count > 0 ? occl_acc / occl_count : -1.0;
    j["occluder_samples"] = occl_count;

    // ---- attention-outside-mask mass on training-style forward passes ----
    {
        const TryOnUNet net = make_unet(ckpt);
        const GarmentEncoder enc = make_encoder(ckpt);
        const Codec codec = Codec::from_name(ckpt.config.at("codec").get<std::string>());
        const NoiseSchedule sched = build_schedule(
            ckpt.config.at("T").get<int>(), ckpt.config.at("schedule_kind").get<std::string>(),
            ckpt.config.at("beta_start").get<double>(), ckpt.config.at("beta_end").get<double>());
        Rng rng(detail::splitmix64_once(cfg.seed ^ 0xA77Eull));
        double tok_acc = 0.0, row_acc = 0.0;
        int probes = 0;
        for (const auto& t : test) {
            const Latent z0 = encode(codec, t.p);
            const Latent pose = encode(codec, t.pose);
            const Latent src = encode(codec, t.p_prime);
            const GarmentTokens tokens = enc.encode(t.garment);
            for (int k = 0; k < cfg.attn_probes; ++k) {
                const int tt = sample_timestep(rng, sched.T);
                const Latent eps = gaussian_like(rng, z0.h, z0.w, z0.c);
                const Latent z_t = forward_sample(z0, tt, eps, sched);
                auto [eps_hat, rec] = predict_noise(net, {z_t, pose, src}, tt, tokens);
                tok_acc += token_localization_loss(rec, t.m);
                row_acc += localization_loss(rec, t.m);
                ++probes;
            }
        }
        j["attn_outside_mass"] = tok_acc / probes;
        j["attn_outside_mass_rowstoch"] = row_acc / probes;
        j["attn_probes"] = probes;
    }

    j["sample_steps"] = cfg.sample_steps;
    j["mode"] = sample_mode_name(cfg.mode);
    j["seed"] = cfg.seed;
    j["test_count"] = test.size();
    j["checkpoint_step"] = ckpt.step;
    return j;
}

nlohmann::json ablate(const AblateConfig& cfg) {
    require(!cfg.out_root.empty(), "ablate: out_root must be set");
    fs::create_directories(cfg.out_root);

    const std::string plain_dir = (fs::path(cfg.out_root) / "data_plain").string();
    const std::string wild_dir = (fs::path(cfg.out_root) / "data_wild").string();

    auto have_dataset = [](const std::string& dir) {
        return fs::exists(fs::path(dir) / "manifest.json");
    };
    if (!(cfg.reuse_existing && have_dataset(plain_dir))) {
        DatasetConfig d;
        d.count = cfg.data_count;
        d.seed = cfg.data_seed;
        d.augment = false;
        d.resolution = cfg.tmpl.resolution;
        d.codec = cfg.tmpl.codec;
        d.out_dir = plain_dir;
        build_dataset(d);
    }
    if (!(cfg.reuse_existing && have_dataset(wild_dir))) {
        DatasetConfig d;
        d.count = cfg.data_count;
        d.seed = cfg.data_seed;
        d.augment = true;
        d.resolution = cfg.tmpl.resolution;
        d.codec = cfg.tmpl.codec;
        d.out_dir = wild_dir;
        build_dataset(d);
    }

    const char* arms[3] = {"base", "wild_aug", "wild_aug_ar"};
    nlohmann::json report;
    report["datasets"] = {{"plain", plain_dir}, {"wild", wild_dir}};
    for (const char* arm : arms) {
        TrainConfig tc = cfg.tmpl;
        tc.arm = arm;
        tc.dataset = std::string(arm) == "base" ? plain_dir : wild_dir;
        tc.out_dir = (fs::path(cfg.out_root) / arm).string();
        tc.validate_and_enforce();

        const std::string ckpt_dir = (fs::path(tc.out_dir) / "checkpoint_final").string();
        Checkpoint ckpt;
        if (cfg.reuse_existing && fs::exists(fs::path(ckpt_dir) / "manifest.json")) {
            ckpt = load_checkpoint(ckpt_dir);
        } else {
            std::cerr << "ablate: training arm " << arm << "\n";
            ckpt = train(tc).checkpoint;
        }

        EvalConfig ec = cfg.eval_tmpl;
        ec.test_dataset = wild_dir;
        report["arms"][arm] = evaluate(ckpt, ec);
        std::cerr << "ablate: arm " << arm << " fid=" << report["arms"][arm]["fid"]
                  << " kid=" << report["arms"][arm]["kid"] << "\n";
    }

    std::ofstream out(fs::path(cfg.out_root) / "ablation_report.json");
    out << report.dump(2) << "\n";
    return report;
}

}  // namespace tryon
