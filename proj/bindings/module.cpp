#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tryon/augment.hpp"
#include "tryon/codec.hpp"
#include "tryon/dataset.hpp"
#include "tryon/evaluate.hpp"
#include "tryon/losses.hpp"
#include "tryon/metrics.hpp"
#include "tryon/nn.hpp"
#include "tryon/png_io.hpp"
#include "tryon/sampler.hpp"
#include "tryon/schedule.hpp"
#include "tryon/train.hpp"
#include "tryon/unet.hpp"

namespace py = pybind11;
using namespace tryon;

namespace {

Tensor tensor_from_numpy(py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
    const auto buf = arr.request();
    require(buf.ndim == 3, "expected an (h, w, c) array");
    Tensor t(static_cast<int>(buf.shape[0]), static_cast<int>(buf.shape[1]),
             static_cast<int>(buf.shape[2]));
    const double* p = static_cast<const double*>(buf.ptr);
    std::copy(p, p + t.size(), t.v.begin());
    return t;
}

py::array_t<double> tensor_to_numpy(const Tensor& t) {
    py::array_t<double> arr({t.h, t.w, t.c});
    std::copy(t.v.begin(), t.v.end(), arr.mutable_data());
    return arr;
}

Mask mask_from_numpy(py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
    const auto buf = arr.request();
    require(buf.ndim == 2, "expected an (h, w) mask array");
    Mask m(static_cast<int>(buf.shape[0]), static_cast<int>(buf.shape[1]));
    const double* p = static_cast<const double*>(buf.ptr);
    for (size_t i = 0; i < m.size(); ++i) {
        require(p[i] == 0.0 || p[i] == 1.0, "mask values must be 0 or 1");
        m.v[i] = p[i] != 0.0 ? 1 : 0;
    }
    return m;
}

py::array_t<double> mask_to_numpy(const Mask& m) {
    py::array_t<double> arr({m.h, m.w});
    double* p = arr.mutable_data();
    for (size_t i = 0; i < m.size(); ++i) p[i] = m.v[i];
    return arr;
}

AttentionRecord record_from_list(const std::vector<std::tuple<int, int, Eigen::MatrixXd>>& xs) {
    AttentionRecord rec;
    for (const auto& [h, w, scores] : xs) rec.push_back({static_cast<int>(rec.size()), h, w, scores});
    return rec;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "mask-free virtual try-on core (diffusion training, augmentation, metrics)";

    // ---- schedule / forward process ----
    py::class_<NoiseSchedule>(m, "NoiseSchedule")
        .def_readonly("T", &NoiseSchedule::T)
        .def_readonly("betas", &NoiseSchedule::betas)
        .def_readonly("alphas", &NoiseSchedule::alphas)
        .def_readonly("alpha_bars", &NoiseSchedule::alpha_bars)
        .def("alpha_bar", &NoiseSchedule::alpha_bar);

    m.def("build_schedule", &build_schedule, py::arg("T"), py::arg("kind"),
          py::arg("beta_start"), py::arg("beta_end"));
    m.def(
        "forward_sample",
        [](py::array_t<double> z0, int t, py::array_t<double> eps, const NoiseSchedule& s) {
            return tensor_to_numpy(
                forward_sample(tensor_from_numpy(std::move(z0)), t,
                               tensor_from_numpy(std::move(eps)), s));
        },
        py::arg("z0"), py::arg("t"), py::arg("eps"), py::arg("sched"));
    m.def("sample_timestep", [](uint64_t seed, int T) {
        Rng rng(seed);
        return sample_timestep(rng, T);
    });

    // ---- codec ----
    m.def("encode", [](const std::string& codec, py::array_t<double> img) {
        return tensor_to_numpy(encode(Codec::from_name(codec), tensor_from_numpy(std::move(img))));
    });
    m.def("decode", [](const std::string& codec, py::array_t<double> z) {
        return tensor_to_numpy(decode(Codec::from_name(codec), tensor_from_numpy(std::move(z))));
    });

    // ---- losses ----
    m.def("ldm_loss", [](py::array_t<double> eps, py::array_t<double> eps_hat) {
        return ldm_loss(tensor_from_numpy(std::move(eps)), tensor_from_numpy(std::move(eps_hat)));
    });
    m.def("resize_mask", [](py::array_t<double> mask, int h, int w) {
        return mask_to_numpy(resize_mask(mask_from_numpy(std::move(mask)), h, w));
    });
    m.def("localization_loss",
          [](const std::vector<std::tuple<int, int, Eigen::MatrixXd>>& rec,
             py::array_t<double> mask) {
              return localization_loss(record_from_list(rec), mask_from_numpy(std::move(mask)));
          },
          "Mean attention mass outside the mask, Eq.-style row-stochastic form; "
          "entries are (h, w, scores) per block");
    m.def("token_localization_loss",
          [](const std::vector<std::tuple<int, int, Eigen::MatrixXd>>& rec,
             py::array_t<double> mask) {
              return token_localization_loss(record_from_list(rec),
                                             mask_from_numpy(std::move(mask)));
          });
    m.def("total_loss", [](double ldm, double ar, double lambda_ar) {
        const LossBreakdown b = total_loss(ldm, ar, lambda_ar);
        return py::dict(py::arg("ldm") = b.ldm, py::arg("ar") = b.ar,
                        py::arg("total") = b.total, py::arg("lambda_ar") = b.lambda_ar);
    });

    // ---- attention op ----
    m.def("cross_attention", &cross_attention, py::arg("p"), py::arg("tokens"), py::arg("wq"),
          py::arg("wk"), py::arg("wv"), py::arg("heads") = 1,
          "returns (p_attn, head-averaged scores)");
    m.def("timestep_embedding", [](int t, int dim) {
        const nn::Mat<double> e = nn::timestep_embedding<double>(t, dim);
        return Eigen::VectorXd(e.row(0).transpose());
    });

    // ---- augmentation ----
    m.def("composite",
          [](py::array_t<double> bg, py::array_t<double> subject, py::array_t<double> fg) {
              return tensor_to_numpy(composite({tensor_from_numpy(std::move(bg)),
                                                tensor_from_numpy(std::move(subject)),
                                                tensor_from_numpy(std::move(fg))}));
          },
          py::arg("background"), py::arg("subject_rgba"), py::arg("foreground_rgba"));
    m.def("update_mask", [](py::array_t<double> mask, py::array_t<double> fg_alpha) {
        return mask_to_numpy(
            update_mask(mask_from_numpy(std::move(mask)), tensor_from_numpy(std::move(fg_alpha))));
    });
    m.def("gen_background", [](uint64_t seed, int h, int w) {
        Rng rng(seed);
        return tensor_to_numpy(gen_background(BackgroundSpec::random(rng), h, w));
    });

    // ---- dataset ----
    m.def(
        "build_dataset",
        [](const std::string& out_dir, int count, uint64_t seed, bool augment, int resolution,
           double rho_min, double rho_max) {
            DatasetConfig d;
            d.out_dir = out_dir;
            d.count = count;
            d.seed = seed;
            d.augment = augment;
            d.resolution = resolution;
            d.aug.fg.rho_min = rho_min;
            d.aug.fg.rho_max = rho_max;
            const DatasetManifest man = build_dataset(d);
            py::list ids;
            for (const auto& s : man.samples) ids.append(s.id);
            return ids;
        },
        py::arg("out_dir"), py::arg("count"), py::arg("seed") = 1, py::arg("augment") = false,
        py::arg("resolution") = 48, py::arg("rho_min") = 0.05, py::arg("rho_max") = 0.4);
    m.def("read_png", [](const std::string& path) { return tensor_to_numpy(read_png(path)); });
    m.def("write_png", [](const std::string& path, py::array_t<double> img) {
        write_png(path, tensor_from_numpy(std::move(img)));
    });

    // ---- metrics ----
    m.def("fid", &fid, py::arg("x"), py::arg("y"));
    m.def("kid", &kid, py::arg("x"), py::arg("y"), py::arg("degree") = 3);
    m.def("region_mae", [](py::array_t<double> a, py::array_t<double> b, py::array_t<double> mask,
                           bool inside) {
        return region_mae(tensor_from_numpy(std::move(a)), tensor_from_numpy(std::move(b)),
                          mask_from_numpy(std::move(mask)), inside);
    });
    m.def("extract_features", [](const std::vector<py::array_t<double>>& images, int q,
                                 uint64_t seed) {
        std::vector<Image> imgs;
        imgs.reserve(images.size());
        for (const auto& a : images) imgs.push_back(tensor_from_numpy(a));
        require(!imgs.empty(), "extract_features: empty image list");
        FeatureExtractor ex(imgs[0].h, q, seed);
        return Eigen::MatrixXd(ex.extract(imgs));
    });

    // ---- training / inference / evaluation ----
    m.def(
        "train",
        [](const std::string& config_json) {
            const TrainConfig cfg = TrainConfig::from_json(nlohmann::json::parse(config_json));
            const TrainResult r = train(cfg);
            return py::make_tuple(r.checkpoint_dir, r.log_path);
        },
        py::arg("config_json"), "runs training from a JSON config string; returns "
                                "(checkpoint_dir, log_path)");
    m.def("train_profile_json",
          [](const std::string& name) { return train_profile(name).to_json().dump(); });
    m.def(
        "try_on",
        [](const std::string& checkpoint_dir, py::array_t<double> person,
           py::array_t<double> pose, py::array_t<double> garment, int steps,
           const std::string& mode, uint64_t seed) {
            InferOptions opts;
            opts.steps = steps;
            opts.mode = sample_mode_from_name(mode);
            opts.seed = seed;
            const Checkpoint ckpt = load_checkpoint(checkpoint_dir);
            return tensor_to_numpy(try_on(ckpt, tensor_from_numpy(std::move(person)),
                                          tensor_from_numpy(std::move(pose)),
                                          tensor_from_numpy(std::move(garment)), opts));
        },
        py::arg("checkpoint_dir"), py::arg("person"), py::arg("pose"), py::arg("garment"),
        py::arg("steps") = 50, py::arg("mode") = "deterministic", py::arg("seed") = 0);
    m.def(
        "multi_garment",
        [](const std::string& checkpoint_dir, py::array_t<double> person,
           py::array_t<double> pose, const std::vector<py::array_t<double>>& garments, int steps,
           const std::string& mode, uint64_t seed) {
            InferOptions opts;
            opts.steps = steps;
            opts.mode = sample_mode_from_name(mode);
            opts.seed = seed;
            const Checkpoint ckpt = load_checkpoint(checkpoint_dir);
            std::vector<Image> gs;
            gs.reserve(garments.size());
            for (const auto& g : garments) gs.push_back(tensor_from_numpy(g));
            return tensor_to_numpy(multi_garment(ckpt, tensor_from_numpy(std::move(person)),
                                                 tensor_from_numpy(std::move(pose)), gs, opts));
        },
        py::arg("checkpoint_dir"), py::arg("person"), py::arg("pose"), py::arg("garments"),
        py::arg("steps") = 50, py::arg("mode") = "deterministic", py::arg("seed") = 0);
    m.def(
        "evaluate",
        [](const std::string& checkpoint_dir, const std::string& dataset, int steps,
           uint64_t seed, int feature_dim, int attn_probes) {
            EvalConfig ec;
            ec.test_dataset = dataset;
            ec.sample_steps = steps;
            ec.seed = seed;
            ec.feature_dim = feature_dim;
            ec.attn_probes = attn_probes;
            return evaluate(load_checkpoint(checkpoint_dir), ec).dump();
        },
        py::arg("checkpoint_dir"), py::arg("dataset"), py::arg("steps") = 50,
        py::arg("seed") = 1234, py::arg("feature_dim") = 32, py::arg("attn_probes") = 4,
        "returns the evaluation report as a JSON string");

    m.def(
        "denoise_step",
        [](py::array_t<double> z_t, int t, py::array_t<double> eps_hat, const NoiseSchedule& s,
           const std::string& mode, py::object noise, int t_prev) {
            Latent noise_l;
            const Latent* noise_p = nullptr;
            if (!noise.is_none()) {
                noise_l = tensor_from_numpy(noise.cast<py::array_t<double>>());
                noise_p = &noise_l;
            }
            return tensor_to_numpy(denoise_step(tensor_from_numpy(std::move(z_t)), t,
                                                tensor_from_numpy(std::move(eps_hat)), s,
                                                sample_mode_from_name(mode), noise_p, t_prev));
        },
        py::arg("z_t"), py::arg("t"), py::arg("eps_hat"), py::arg("sched"),
        py::arg("mode") = "deterministic", py::arg("noise") = py::none(),
        py::arg("t_prev") = -1);
}
