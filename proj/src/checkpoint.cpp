#include "tryon/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace tryon {

namespace {

constexpr char kMagic[8] = {'T', 'R', 'Y', 'P', 'R', 'M', '0', '1'};

void write_u32(std::ostream& out, uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

uint32_t read_u32(std::istream& in) {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

void write_section(const fs::path& path, const ParamSection& sec) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "checkpoint: cannot write " + path.string());
    out.write(kMagic, sizeof kMagic);
    write_u32(out, static_cast<uint32_t>(sec.size()));
    for (const auto& p : sec) {
        write_u32(out, static_cast<uint32_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        write_u32(out, static_cast<uint32_t>(p.w.rows()));
        write_u32(out, static_cast<uint32_t>(p.w.cols()));
        for (Eigen::Index r = 0; r < p.w.rows(); ++r)
            for (Eigen::Index c = 0; c < p.w.cols(); ++c) {
                const double v = p.w(r, c);
                out.write(reinterpret_cast<const char*>(&v), sizeof v);
            }
    }
}

ParamSection read_section(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "checkpoint: cannot read " + path.string());
    char magic[8];
    in.read(magic, sizeof magic);
    require(std::memcmp(magic, kMagic, sizeof kMagic) == 0,
            "checkpoint: bad magic in " + path.string());
    const uint32_t count = read_u32(in);
    ParamSection sec(count);
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t nlen = read_u32(in);
        sec[i].name.resize(nlen);
        in.read(sec[i].name.data(), nlen);
        const uint32_t rows = read_u32(in);
        const uint32_t cols = read_u32(in);
        sec[i].w.resize(rows, cols);
        for (uint32_t r = 0; r < rows; ++r)
            for (uint32_t c = 0; c < cols; ++c) {
                double v;
                in.read(reinterpret_cast<char*>(&v), sizeof v);
                sec[i].w(r, c) = v;
            }
        require(in.good(), "checkpoint: truncated section " + path.string());
    }
    return sec;
}

}  // namespace

std::string section_hash(const ParamSection& sec) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& p : sec) {
        h = fnv1a64(p.name.data(), p.name.size(), h);
        for (Eigen::Index r = 0; r < p.w.rows(); ++r)
            for (Eigen::Index c = 0; c < p.w.cols(); ++c) {
                const double v = p.w(r, c);
                h = fnv1a64(&v, sizeof v, h);
            }
    }
    return to_hex(h);
}

void save_checkpoint(const std::string& dir, const Checkpoint& ckpt) {
    fs::create_directories(dir);
    write_section(fs::path(dir) / "tryon_unet.bin", ckpt.unet_params);
    write_section(fs::path(dir) / "garment_encoder.bin", ckpt.encoder_params);

    nlohmann::json j;
    j["step"] = ckpt.step;
    j["config"] = ckpt.config;
    j["sections"] = {
        {"tryon_unet",
         {{"file", "tryon_unet.bin"},
          {"hash", section_hash(ckpt.unet_params)},
          {"config", unet_config_to_json(ckpt.unet_cfg)}}},
        {"garment_encoder",
         {{"file", "garment_encoder.bin"},
          {"hash", section_hash(ckpt.encoder_params)},
          {"config", encoder_config_to_json(ckpt.enc_cfg)}}},
    };
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : ckpt.block_layout) blocks.push_back({b[0], b[1], b[2]});
    j["attention_block_order"] = std::move(blocks);

    std::ofstream out(fs::path(dir) / "manifest.json");
    out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "manifest.json");
    require(in.good(), "checkpoint: missing manifest in " + dir);
    nlohmann::json j;
    in >> j;

    Checkpoint c;
    c.step = j.at("step").get<int64_t>();
    c.config = j.at("config");
    c.unet_cfg = unet_config_from_json(j.at("sections").at("tryon_unet").at("config"));
    c.enc_cfg = encoder_config_from_json(j.at("sections").at("garment_encoder").at("config"));
    c.unet_params = read_section(fs::path(dir) /
                                 j.at("sections").at("tryon_unet").at("file").get<std::string>());
    c.encoder_params = read_section(
        fs::path(dir) / j.at("sections").at("garment_encoder").at("file").get<std::string>());
    c.unet_hash = j.at("sections").at("tryon_unet").at("hash").get<std::string>();
    c.encoder_hash = j.at("sections").at("garment_encoder").at("hash").get<std::string>();
    require(section_hash(c.unet_params) == c.unet_hash,
            "checkpoint: tryon_unet hash mismatch (corrupt archive)");
    require(section_hash(c.encoder_params) == c.encoder_hash,
            "checkpoint: garment_encoder hash mismatch (corrupt archive)");
    for (const auto& b : j.at("attention_block_order"))
        c.block_layout.push_back({b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>()});
    return c;
}

TryOnUNet make_unet(const Checkpoint& ckpt) {
    TryOnUNet net(ckpt.unet_cfg);
    section_to_store(ckpt.unet_params, net.params);
    return net;
}

GarmentEncoder make_encoder(const Checkpoint& ckpt) {
    GarmentEncoder enc(ckpt.enc_cfg);
    section_to_store(ckpt.encoder_params, enc.params);
    return enc;
}

nlohmann::json unet_config_to_json(const UNetConfig& c) {
    return {{"latent_channels", c.latent_channels},
            {"resolution", c.resolution},
            {"width0", c.width0},
            {"width1", c.width1},
            {"width2", c.width2},
            {"heads", c.heads},
            {"attn_dim", c.attn_dim},
            {"token_feature_dim", c.token_feature_dim},
            {"time_embed_dim", c.time_embed_dim},
            {"max_timestep", c.max_timestep},
            {"zero_init_final", c.zero_init_final}};
}

UNetConfig unet_config_from_json(const nlohmann::json& j) {
    UNetConfig c;
    c.latent_channels = j.at("latent_channels").get<int>();
    c.resolution = j.at("resolution").get<int>();
    c.width0 = j.at("width0").get<int>();
    c.width1 = j.at("width1").get<int>();
    c.width2 = j.at("width2").get<int>();
    c.heads = j.at("heads").get<int>();
    c.attn_dim = j.at("attn_dim").get<int>();
    c.token_feature_dim = j.at("token_feature_dim").get<int>();
    c.time_embed_dim = j.at("time_embed_dim").get<int>();
    c.max_timestep = j.at("max_timestep").get<int>();
    c.zero_init_final = j.at("zero_init_final").get<bool>();
    return c;
}

nlohmann::json encoder_config_to_json(const GarmentEncoderConfig& c) {
    return {{"resolution", c.resolution},
            {"grid", c.grid},
            {"feature_dim", c.feature_dim},
            {"width1", c.width1},
            {"width2", c.width2}};
}

GarmentEncoderConfig encoder_config_from_json(const nlohmann::json& j) {
    GarmentEncoderConfig c;
    c.resolution = j.at("resolution").get<int>();
    c.grid = j.at("grid").get<int>();
    c.feature_dim = j.at("feature_dim").get<int>();
    c.width1 = j.at("width1").get<int>();
    c.width2 = j.at("width2").get<int>();
    return c;
}

}  // namespace tryon
