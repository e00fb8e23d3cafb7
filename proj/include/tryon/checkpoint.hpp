#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "tryon/garment_encoder.hpp"
#include "tryon/nn.hpp"
#include "tryon/unet.hpp"

namespace tryon {

struct NamedParam {
    std::string name;
    Eigen::MatrixXd w;
};

using ParamSection = std::vector<NamedParam>;

// Checkpoint directory layout:
//   manifest.json           step, config snapshot, section hashes, block order
//   tryon_unet.bin          denoiser parameters (float64)
//   garment_encoder.bin     frozen encoder parameters (float64)
struct Checkpoint {
    int64_t step = 0;
    nlohmann::json config;  // training config snapshot
    UNetConfig unet_cfg;
    GarmentEncoderConfig enc_cfg;
    ParamSection unet_params;
    ParamSection encoder_params;
    std::string unet_hash;
    std::string encoder_hash;
    std::vector<std::array<int, 3>> block_layout;
};

template <typename T>
ParamSection section_from_store(const nn::ParamStore<T>& ps) {
    ParamSection out;
    out.reserve(ps.entries.size());
    for (const auto& e : ps.entries) out.push_back({e.name, e.w.template cast<double>()});
    return out;
}

template <typename T>
void section_to_store(const ParamSection& sec, nn::ParamStore<T>& ps) {
    require(sec.size() == ps.entries.size(), "checkpoint: parameter section size mismatch");
    for (size_t i = 0; i < sec.size(); ++i) {
        auto& e = ps.entries[i];
        require(sec[i].name == e.name, "checkpoint: parameter name mismatch: " + sec[i].name);
        require(sec[i].w.rows() == e.w.rows() && sec[i].w.cols() == e.w.cols(),
                "checkpoint: parameter shape mismatch: " + sec[i].name);
        e.w = sec[i].w.template cast<T>();
    }
}

std::string section_hash(const ParamSection& sec);

void save_checkpoint(const std::string& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& dir);

// Rebuilds runnable models from a checkpoint (float64 instantiations).
TryOnUNet make_unet(const Checkpoint& ckpt);
GarmentEncoder make_encoder(const Checkpoint& ckpt);

nlohmann::json unet_config_to_json(const UNetConfig& c);
UNetConfig unet_config_from_json(const nlohmann::json& j);
nlohmann::json encoder_config_to_json(const GarmentEncoderConfig& c);
GarmentEncoderConfig encoder_config_from_json(const nlohmann::json& j);

}  // namespace tryon
