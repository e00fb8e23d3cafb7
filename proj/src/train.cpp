#include "tryon/train.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tryon/codec.hpp"
#include "tryon/convert.hpp"
#include "tryon/schedule.hpp"

namespace fs = std::filesystem;

namespace tryon {

void TrainConfig::validate_and_enforce() {
    require(arm == "base" || arm == "wild_aug" || arm == "wild_aug_ar",
            "train: unknown ablation arm '" + arm + "'");
    if (arm == "base" || arm == "wild_aug") lambda_ar = 0.0;
    require(lambda_ar >= 0.0, "train: lambda_ar must be >= 0");
    require(resolution >= 16 && resolution % 16 == 0,
            "train: resolution must be a positive multiple of 16");
    require(T >= 1, "train: T must be >= 1");
    require(batch >= 1 && steps >= 0, "train: bad batch/steps");
    require(lr > 0.0, "train: lr must be positive");
    require(dtype == "float32" || dtype == "float64", "train: dtype must be float32|float64");
    require(workers >= 1 && workers <= 64, "train: workers must be in [1, 64]");
}

nlohmann::json TrainConfig::to_json() const {
    return {{"resolution", resolution},
            {"codec", codec},
            {"T", T},
            {"schedule_kind", schedule_kind},
            {"beta_start", beta_start},
            {"beta_end", beta_end},
            {"lr", lr},
            {"batch", batch},
            {"steps", steps},
            {"lambda_ar", lambda_ar},
            {"arm", arm},
            {"seed", seed},
            {"dataset", dataset},
            {"out_dir", out_dir},
            {"checkpoint_every", checkpoint_every},
            {"dtype", dtype},
            {"workers", workers},
            {"model",
             {{"width0", width0},
              {"width1", width1},
              {"width2", width2},
              {"heads", heads},
              {"attn_dim", attn_dim},
              {"token_feature_dim", token_feature_dim},
              {"time_embed_dim", time_embed_dim},
              {"token_grid", token_grid},
              {"enc_width1", enc_width1},
              {"enc_width2", enc_width2}}},
            {"warmup", {{"steps", warmup_steps}, {"lr", warmup_lr}}}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.resolution = j.at("resolution").get<int>();
    c.codec = j.at("codec").get<std::string>();
    c.T = j.at("T").get<int>();
    c.schedule_kind = j.at("schedule_kind").get<std::string>();
    c.beta_start = j.at("beta_start").get<double>();
    c.beta_end = j.at("beta_end").get<double>();
    c.lr = j.at("lr").get<double>();
    c.batch = j.at("batch").get<int>();
    c.steps = j.at("steps").get<int>();
    c.lambda_ar = j.at("lambda_ar").get<double>();
    c.arm = j.at("arm").get<std::string>();
    c.seed = j.at("seed").get<uint64_t>();
    c.dataset = j.at("dataset").get<std::string>();
    c.out_dir = j.at("out_dir").get<std::string>();
    c.checkpoint_every = j.value("checkpoint_every", 0);
    c.dtype = j.value("dtype", std::string("float32"));
    c.workers = j.value("workers", c.workers);
    if (j.contains("model")) {
        const auto& m = j.at("model");
        c.width0 = m.value("width0", c.width0);
        c.width1 = m.value("width1", c.width1);
        c.width2 = m.value("width2", c.width2);
        c.heads = m.value("heads", c.heads);
        c.attn_dim = m.value("attn_dim", c.attn_dim);
        c.token_feature_dim = m.value("token_feature_dim", c.token_feature_dim);
        c.time_embed_dim = m.value("time_embed_dim", c.time_embed_dim);
        c.token_grid = m.value("token_grid", c.token_grid);
        c.enc_width1 = m.value("enc_width1", c.enc_width1);
        c.enc_width2 = m.value("enc_width2", c.enc_width2);
    }
    if (j.contains("warmup")) {
        c.warmup_steps = j.at("warmup").value("steps", c.warmup_steps);
        c.warmup_lr = j.at("warmup").value("lr", c.warmup_lr);
    }
    c.validate_and_enforce();
    return c;
}

UNetConfig TrainConfig::unet_config() const {
    UNetConfig u;
    u.latent_channels = 3;
    u.resolution = Codec::from_name(codec).latent_dim(resolution);
    u.width0 = width0;
    u.width1 = width1;
    u.width2 = width2;
    u.heads = heads;
    u.attn_dim = attn_dim;
    u.token_feature_dim = token_feature_dim;
    u.time_embed_dim = time_embed_dim;
    u.max_timestep = T;
    return u;
}

GarmentEncoderConfig TrainConfig::encoder_config() const {
    GarmentEncoderConfig e;
    e.resolution = resolution;
    e.grid = token_grid;
    e.feature_dim = token_feature_dim;
    e.width1 = enc_width1;
    e.width2 = enc_width2;
    return e;
}

TrainConfig train_profile(const std::string& name) {
    TrainConfig c;
    if (name == "desk") return c;
    if (name == "smoke") {
        c.resolution = 32;
        c.T = 100;
        c.batch = 8;
        c.steps = 300;
        c.warmup_steps = 120;
        return c;
    }
    if (name == "paper") {
        c.T = 1000;
        c.beta_end = 0.02;
        c.lr = 5e-6;
        c.batch = 32;
        c.steps = 12000;
        c.lambda_ar = 1.0;
        return c;
    }
    throw ContractError("unknown train profile: " + name);
}

namespace {

template <typename T>
struct PreparedSample {
    std::string id;
    nn::Mat<T> z0, pose, src;
    nn::Mat<T> tokens;
    Mask mask;
};

template <typename T>
nn::Mat<T> draw_gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    nn::Mat<T> m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.normal());
    return m;
}

template <typename T>
TrainResult train_impl(const TrainConfig& cfg) {
    const DatasetManifest manifest = load_manifest(cfg.dataset);
    if (cfg.arm == "base")
        require(!manifest.config.augment,
                "train: arm 'base' requires an unaugmented dataset");
    else
        require(manifest.config.augment,
                "train: arm '" + cfg.arm + "' requires an augmented dataset");
    require(manifest.config.resolution == cfg.resolution,
            "train: dataset/config resolution mismatch");

    const auto train_recs = manifest.split("train");
    require(!train_recs.empty(), "train: dataset has no train split");

    const Codec codec = Codec::from_name(cfg.codec);
    const NoiseSchedule sched =
        build_schedule(cfg.T, cfg.schedule_kind, cfg.beta_start, cfg.beta_end);

    // ---- garment encoder warm-up (then frozen) ----
    GarmentEncoderT<T> enc(cfg.encoder_config());
    {
        Rng enc_rng(detail::splitmix64_once(cfg.seed ^ 0xE2C0DE));
        enc.init_weights(enc_rng);
    }
    {
        std::vector<Image> garments;
        garments.reserve(train_recs.size());
        for (const auto* rec : train_recs)
            garments.push_back(load_triplet(cfg.dataset, *rec).garment);
        pretrain_warmup(enc, garments, cfg.warmup_steps, cfg.warmup_lr,
                        detail::splitmix64_once(cfg.seed ^ 0x3A9Dull));
    }
    const ParamSection enc_section = section_from_store(enc.params);
    const std::string enc_hash = section_hash(enc_section);

    // ---- preload training samples into latent space ----
    std::vector<PreparedSample<T>> samples;
    samples.reserve(train_recs.size());
    for (const auto* rec : train_recs) {
        TryOnTriplet t = load_triplet(cfg.dataset, *rec);
        PreparedSample<T> s;
        s.id = t.id;
        s.z0 = to_mat<T>(encode(codec, t.p));
        s.src = to_mat<T>(encode(codec, t.p_prime));
        s.pose = to_mat<T>(encode(codec, t.pose));
        s.tokens = enc.encode_mat(t.garment);
        s.mask = std::move(t.m);
        samples.push_back(std::move(s));
    }

    // ---- denoiser ----
    const UNetConfig ucfg = cfg.unet_config();
    TryOnUNetT<T> net(ucfg);
    {
        Rng net_rng(detail::splitmix64_once(cfg.seed ^ 0x0DE7));
        net.init_weights(net_rng);
    }
    nn::Adam<T> opt;
    opt.lr = cfg.lr;
    opt.init(net.params);

    fs::create_directories(cfg.out_dir);
    const std::string log_path = (fs::path(cfg.out_dir) / "train_log.jsonl").string();
    std::ofstream log_out(log_path);
    require(log_out.good(), "train: cannot open log " + log_path);

    TrainResult result;
    const Rng run_rng(cfg.seed);
    const Eigen::Index n_lat = static_cast<Eigen::Index>(ucfg.resolution) * ucfg.resolution;
    const int latent_c = ucfg.latent_channels;
    const double numel = static_cast<double>(n_lat) * latent_c;

    auto save_ckpt = [&](int64_t step, const std::string& dirname) {
        Checkpoint ck;
        ck.step = step;
        ck.config = cfg.to_json();
        ck.unet_cfg = ucfg;
        ck.enc_cfg = enc.cfg;
        ck.unet_params = section_from_store(net.params);
        ck.encoder_params = enc_section;
        ck.unet_hash = section_hash(ck.unet_params);
        ck.encoder_hash = enc_hash;
        ck.block_layout = net.block_layout();
        const std::string dir = (fs::path(cfg.out_dir) / dirname).string();
        save_checkpoint(dir, ck);
        // the frozen-encoder invariant, asserted on every save
        require(section_hash(ck.encoder_params) == enc_hash,
                "train: garment encoder changed after freezing");
        return std::make_pair(ck, dir);
    };

    // worker clones share nothing; gradients reduce in worker-index order so
    // any fixed worker count is bitwise reproducible
    const int workers = std::max(1, cfg.workers);
    std::vector<TryOnUNetT<T>> worker_nets;
    for (int wi = 1; wi < workers; ++wi) worker_nets.emplace_back(net);

    struct Draw {
        size_t idx;
        int t;
        uint64_t eps_seed;
    };
    std::vector<Draw> draws(static_cast<size_t>(cfg.batch));
    std::vector<double> ldm_w(static_cast<size_t>(workers)), ar_w(ldm_w), eq3_w(ldm_w);

    for (int step = 0; step < cfg.steps; ++step) {
        Rng srng = run_rng.child(0x57E9000ull + static_cast<uint64_t>(step));
        net.params.zero_grad();
        for (auto& wn : worker_nets) wn.params.zero_grad();
        std::fill(ldm_w.begin(), ldm_w.end(), 0.0);
        std::fill(ar_w.begin(), ar_w.end(), 0.0);
        std::fill(eq3_w.begin(), eq3_w.end(), 0.0);

        std::vector<std::string> batch_ids;
        batch_ids.reserve(static_cast<size_t>(cfg.batch));
        for (int j = 0; j < cfg.batch; ++j) {
            Draw d;
            d.idx = static_cast<size_t>(
                srng.uniform_int(0, static_cast<int64_t>(samples.size()) - 1));
            d.t = sample_timestep(srng, cfg.T);
            d.eps_seed = srng.next();
            draws[static_cast<size_t>(j)] = d;
            batch_ids.push_back(samples[d.idx].id);
        }

#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(workers) if (workers > 1)
#endif
        for (int j = 0; j < cfg.batch; ++j) {
            const int wi = j % workers;
            TryOnUNetT<T>& wnet = wi == 0 ? net : worker_nets[static_cast<size_t>(wi - 1)];
            const Draw& d = draws[static_cast<size_t>(j)];
            const auto& s = samples[d.idx];

            Rng eps_rng(d.eps_seed);
            const nn::Mat<T> eps = draw_gaussian<T>(eps_rng, n_lat, latent_c);
            const T cs = static_cast<T>(std::sqrt(sched.alpha_bar(d.t)));
            const T cn = static_cast<T>(std::sqrt(1.0 - sched.alpha_bar(d.t)));

            nn::Mat<T> x(n_lat, ucfg.in_channels());
            x << (cs * s.z0 + cn * eps), s.pose, s.src;

            typename TryOnUNetT<T>::Trace tr;
            AttentionRecord rec;
            nn::Mat<T> eps_hat = wnet.forward(x, d.t, s.tokens, tr, &rec);

            nn::Mat<T> diff = eps_hat - eps;
            ldm_w[static_cast<size_t>(wi)] +=
                static_cast<double>(diff.template cast<double>().squaredNorm()) / numel;
            ar_w[static_cast<size_t>(wi)] += token_localization_loss(rec, s.mask);
            eq3_w[static_cast<size_t>(wi)] += localization_loss(rec, s.mask);

            nn::Mat<T> d_eps = diff * static_cast<T>(2.0 / (numel * cfg.batch));
            std::vector<nn::Mat<T>> d_attn;
            if (cfg.lambda_ar > 0.0) {
                const auto grads = token_localization_loss_grad(rec, s.mask);
                d_attn.reserve(grads.size());
                for (const auto& g : grads)
                    d_attn.push_back(
                        (g * (cfg.lambda_ar / cfg.batch)).template cast<T>().eval());
            }
            wnet.backward(tr, s.tokens, d_eps, d_attn);
        }

        double ldm_acc = 0.0, ar_acc = 0.0, eq3_acc = 0.0;
        for (int wi = 0; wi < workers; ++wi) {
            ldm_acc += ldm_w[static_cast<size_t>(wi)];
            ar_acc += ar_w[static_cast<size_t>(wi)];
            eq3_acc += eq3_w[static_cast<size_t>(wi)];
        }
        for (auto& wn : worker_nets)
            for (size_t pi = 0; pi < net.params.entries.size(); ++pi)
                net.params.entries[pi].g += wn.params.entries[pi].g;

        const LossBreakdown lb =
            total_loss(ldm_acc / cfg.batch, ar_acc / cfg.batch, cfg.lambda_ar);
        if (!std::isfinite(lb.total)) {
            std::string ids;
            for (const auto& id : batch_ids) ids += id + " ";
            std::cerr << "train: non-finite loss at step " << step << "; batch: " << ids
                      << "\n";
            throw TrainAbort("non-finite loss at step " + std::to_string(step) +
                             " (batch: " + ids + ")");
        }

        nlohmann::json line = {{"step", step},
                               {"ldm", lb.ldm},
                               {"ar", lb.ar},
                               {"total", lb.total},
                               {"lambda_ar", lb.lambda_ar},
                               {"ar_rowstoch", eq3_acc / cfg.batch}};
        log_out << line.dump() << "\n";
        result.log.push_back(lb);

        opt.step(net.params);
        for (auto& wn : worker_nets)
            for (size_t pi = 0; pi < net.params.entries.size(); ++pi)
                wn.params.entries[pi].w = net.params.entries[pi].w;

        if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0 &&
            step + 1 < cfg.steps)
            save_ckpt(step + 1, "checkpoint_" + std::to_string(step + 1));
    }
    log_out.flush();

    auto [ck, dir] = save_ckpt(cfg.steps, "checkpoint_final");
    result.checkpoint = std::move(ck);
    result.checkpoint_dir = dir;
    result.log_path = log_path;
    return result;
}

}  // namespace

TrainResult train(const TrainConfig& cfg_in) {
    TrainConfig cfg = cfg_in;
    cfg.validate_and_enforce();
    require(!cfg.dataset.empty(), "train: dataset path must be set");
    require(!cfg.out_dir.empty(), "train: out_dir must be set");
    if (cfg.dtype == "float64") return train_impl<double>(cfg);
    return train_impl<float>(cfg);
}

}  // namespace tryon
