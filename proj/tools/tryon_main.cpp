#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "tryon/dataset.hpp"
#include "tryon/evaluate.hpp"
#include "tryon/png_io.hpp"
#include "tryon/sampler.hpp"
#include "tryon/train.hpp"

namespace fs = std::filesystem;
using namespace tryon;

namespace {

std::string out_root() {
    const char* env = std::getenv("TRYON_OUT_ROOT");
    return env ? env : "tryon_runs";
}

std::string resolve_out(const std::string& path) {
    if (path.empty() || fs::path(path).is_absolute() || path.front() == '.') return path;
    return (fs::path(out_root()) / path).string();
}

TrainConfig load_train_config(const std::string& profile, const std::string& config_path) {
    TrainConfig cfg = train_profile(profile);
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in.good()) throw ContractError("cannot open config file: " + config_path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw ContractError("config parse error in " + config_path + ": " + e.what());
        }
        // profile defaults fill anything the file omits
        nlohmann::json merged = cfg.to_json();
        merged.merge_patch(j);
        cfg = TrainConfig::from_json(merged);
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mask-free virtual try-on: data, training, inference, evaluation"};
    app.require_subcommand(1);

    // ---- gen-data ----
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic triplet dataset");
    int g_count = 200;
    uint64_t g_seed = 1;
    bool g_augment = false;
    int g_res = 48;
    double g_rho_max = 0.4, g_rho_min = 0.05;
    std::string g_out = "dataset";
    gen->add_option("--count", g_count, "number of triplets");
    gen->add_option("--seed", g_seed, "master seed");
    gen->add_flag("--augment", g_augment, "apply in-the-wild augmentation");
    gen->add_option("--resolution", g_res, "image side (multiple of 16)");
    gen->add_option("--rho-max", g_rho_max, "max occlusion fraction of the try-on mask");
    gen->add_option("--rho-min", g_rho_min, "min occlusion fraction of the try-on mask");
    gen->add_option("--out", g_out, "output directory");

    // ---- train ----
    auto* tr = app.add_subcommand("train", "train the mask-free try-on model");
    std::string t_profile = "desk", t_config, t_dataset, t_out = "run";
    std::string t_arm;
    int t_steps = -1;
    uint64_t t_seed = 0;
    bool t_seed_set = false;
    tr->add_option("--profile", t_profile, "desk | smoke | paper");
    tr->add_option("--config", t_config, "JSON config file (overrides profile fields)");
    tr->add_option("--dataset", t_dataset, "dataset root");
    tr->add_option("--out", t_out, "run output directory");
    tr->add_option("--arm", t_arm, "base | wild_aug | wild_aug_ar");
    tr->add_option("--steps", t_steps, "override step count");
    tr->add_option("--seed", t_seed, "override seed")->each([&](const std::string&) {
        t_seed_set = true;
    });

    // ---- infer ----
    auto* inf = app.add_subcommand("infer", "mask-free try-on inference");
    std::string i_ckpt, i_person, i_pose, i_garment, i_out = "tryon_out.png";
    int i_steps = 50;
    std::string i_mode = "deterministic", i_init = "pure_noise";
    uint64_t i_seed = 0;
    inf->add_option("--checkpoint", i_ckpt, "checkpoint directory")->required();
    inf->add_option("--person", i_person, "source person PNG")->required();
    inf->add_option("--pose", i_pose, "pose map PNG")->required();
    inf->add_option("--garment", i_garment, "garment PNG")->required();
    inf->add_option("--out", i_out, "output PNG");
    inf->add_option("--steps", i_steps, "denoising steps");
    inf->add_option("--mode", i_mode, "deterministic | ancestral");
    inf->add_option("--init", i_init, "pure_noise | noised_source");
    inf->add_option("--seed", i_seed, "sampling seed");

    // ---- multi-infer ----
    auto* minf = app.add_subcommand("multi-infer", "sequential multi-garment try-on");
    std::string m_ckpt, m_person, m_pose, m_out = "tryon_multi.png";
    std::vector<std::string> m_garments;
    int m_steps = 50;
    std::string m_mode = "deterministic";
    uint64_t m_seed = 0;
    minf->add_option("--checkpoint", m_ckpt, "checkpoint directory")->required();
    minf->add_option("--person", m_person, "source person PNG")->required();
    minf->add_option("--pose", m_pose, "pose map PNG")->required();
    minf->add_option("--garment", m_garments, "garment PNGs, applied in order")
        ->required()
        ->expected(-1);
    minf->add_option("--out", m_out, "output PNG");
    minf->add_option("--steps", m_steps, "denoising steps per garment");
    minf->add_option("--mode", m_mode, "deterministic | ancestral");
    minf->add_option("--seed", m_seed, "sampling seed");

    // ---- eval ----
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a test split");
    std::string e_ckpt, e_dataset, e_report = "eval_report.json", e_generated, e_dump;
    int e_steps = 50, e_qdim = 32, e_probes = 4;
    uint64_t e_seed = 1234;
    ev->add_option("--checkpoint", e_ckpt, "checkpoint directory")->required();
    ev->add_option("--dataset", e_dataset, "dataset root (test split used)")->required();
    ev->add_option("--report", e_report, "report JSON path");
    ev->add_option("--steps", e_steps, "denoising steps");
    ev->add_option("--seed", e_seed, "evaluation seed");
    ev->add_option("--feature-dim", e_qdim, "feature extractor dimension");
    ev->add_option("--attn-probes", e_probes, "attention probes per sample");
    ev->add_option("--generated-dir", e_generated, "reuse generated images from here");
    ev->add_option("--dump-dir", e_dump, "save generated images here");

    // ---- ablate ----
    auto* ab = app.add_subcommand("ablate", "run the three-arm ablation end-to-end");
    std::string a_profile = "desk", a_config, a_out = "ablation";
    int a_count = -1;
    uint64_t a_data_seed = 11;
    bool a_reuse = false;
    ab->add_option("--profile", a_profile, "desk | smoke | paper");
    ab->add_option("--config", a_config, "JSON config file for the shared train settings");
    ab->add_option("--out", a_out, "ablation output root");
    ab->add_option("--count", a_count, "dataset triplet count");
    ab->add_option("--data-seed", a_data_seed, "dataset seed");
    ab->add_flag("--reuse", a_reuse, "reuse existing datasets/checkpoints if present");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            DatasetConfig d;
            d.count = g_count;
            d.seed = g_seed;
            d.augment = g_augment;
            d.resolution = g_res;
            d.aug.fg.rho_max = g_rho_max;
            d.aug.fg.rho_min = g_rho_min;
            d.out_dir = resolve_out(g_out);
            const DatasetManifest m = build_dataset(d);
            std::cout << "wrote " << m.samples.size() << " triplets to " << d.out_dir << " ("
                      << m.skipped.size() << " skipped)\n";
        } else if (*tr) {
            TrainConfig cfg = load_train_config(t_profile, t_config);
            if (!t_dataset.empty()) cfg.dataset = t_dataset;
            if (!t_arm.empty()) cfg.arm = t_arm;
            if (t_steps >= 0) cfg.steps = t_steps;
            if (t_seed_set) cfg.seed = t_seed;
            cfg.out_dir = resolve_out(t_out);
            cfg.validate_and_enforce();
            const TrainResult r = train(cfg);
            std::cout << "checkpoint: " << r.checkpoint_dir << "\nlog: " << r.log_path << "\n";
            if (!r.log.empty())
                std::cout << "final loss: total=" << r.log.back().total
                          << " ldm=" << r.log.back().ldm << " ar=" << r.log.back().ar << "\n";
        } else if (*inf) {
            const Checkpoint ckpt = load_checkpoint(i_ckpt);
            InferOptions opts;
            opts.steps = i_steps;
            opts.mode = sample_mode_from_name(i_mode);
            opts.seed = i_seed;
            opts.init = i_init == "noised_source" ? InferInit::noised_source
                                                  : InferInit::pure_noise;
            const Image out = try_on(ckpt, read_png(i_person), read_png(i_pose),
                                     read_png(i_garment), opts);
            write_png(i_out, out);
            std::cout << "wrote " << i_out << "\n";
        } else if (*minf) {
            const Checkpoint ckpt = load_checkpoint(m_ckpt);
            InferOptions opts;
            opts.steps = m_steps;
            opts.mode = sample_mode_from_name(m_mode);
            opts.seed = m_seed;
            std::vector<Image> garments;
            for (const auto& g : m_garments) garments.push_back(read_png(g));
            const Image out =
                multi_garment(ckpt, read_png(m_person), read_png(m_pose), garments, opts);
            write_png(m_out, out);
            std::cout << "wrote " << m_out << "\n";
        } else if (*ev) {
            const Checkpoint ckpt = load_checkpoint(e_ckpt);
            EvalConfig ec;
            ec.test_dataset = e_dataset;
            ec.sample_steps = e_steps;
            ec.seed = e_seed;
            ec.feature_dim = e_qdim;
            ec.attn_probes = e_probes;
            ec.generated_dir = e_generated;
            ec.dump_dir = e_dump;
            const nlohmann::json report = evaluate(ckpt, ec);
            std::ofstream out(e_report);
            out << report.dump(2) << "\n";
            std::cout << report.dump(2) << "\n";
        } else if (*ab) {
            AblateConfig ac;
            ac.tmpl = load_train_config(a_profile, a_config);
            ac.out_root = resolve_out(a_out);
            if (a_count > 0) ac.data_count = a_count;
            ac.data_seed = a_data_seed;
            ac.reuse_existing = a_reuse;
            const nlohmann::json report = ablate(ac);
            std::cout << "arm            fid        kid        attn_outside\n";
            for (const auto& arm : {"base", "wild_aug", "wild_aug_ar"}) {
                const auto& r = report["arms"][arm];
                std::printf("%-14s %-10.4f %-10.4f %-10.4f\n", arm, r["fid"].get<double>(),
                            r["kid"].get<double>(), r["attn_outside_mass"].get<double>());
            }
            std::cout << "report: " << (fs::path(ac.out_root) / "ablation_report.json").string()
                      << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
