#include "tryon/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "tryon/common.hpp"
#include "tryon/png_io.hpp"

namespace fs = std::filesystem;

namespace tryon {

void DatasetConfig::validate() const {
    require(count >= 1, "dataset: count must be >= 1");
    require(resolution >= 32 && resolution % 16 == 0,
            "dataset: resolution must be >= 32 and divisible by 16");
    require(!out_dir.empty(), "dataset: out_dir must be set");
}

std::string split_for(uint64_t sample_seed) {
    const uint64_t h = detail::splitmix64_once(sample_seed ^ 0x5add5eedull);
    const uint64_t bucket = h % 10;
    if (bucket < 8) return "train";
    if (bucket < 9) return "val";
    return "test";
}

namespace {

uint64_t file_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot read file: " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    return fnv1a64(bytes.data(), bytes.size());
}

json fg_params_to_json(const ForegroundParams& p) {
    return json{{"shape", p.shape},
                {"cx", p.cx},
                {"cy", p.cy},
                {"rx", p.rx},
                {"ry", p.ry},
                {"angle", p.angle},
                {"sides", p.sides},
                {"color_a", {p.color_a[0], p.color_a[1], p.color_a[2]}},
                {"color_b", {p.color_b[0], p.color_b[1], p.color_b[2]}},
                {"texture", p.texture},
                {"stripe_period", p.stripe_period}};
}

ForegroundParams fg_params_from_json(const json& j) {
    ForegroundParams p;
    p.shape = j.at("shape").get<int>();
    p.cx = j.at("cx").get<double>();
    p.cy = j.at("cy").get<double>();
    p.rx = j.at("rx").get<double>();
    p.ry = j.at("ry").get<double>();
    p.angle = j.at("angle").get<double>();
    p.sides = j.at("sides").get<int>();
    for (int i = 0; i < 3; ++i) p.color_a[i] = j.at("color_a").at(i).get<double>();
    for (int i = 0; i < 3; ++i) p.color_b[i] = j.at("color_b").at(i).get<double>();
    p.texture = j.at("texture").get<int>();
    p.stripe_period = j.at("stripe_period").get<double>();
    return p;
}

}  // namespace

json augmentation_record_to_json(const AugmentationRecord& rec) {
    json j;
    j["seed"] = rec.seed;
    j["background"] = {{"family", bg_family_name(rec.bg.family)},
                       {"color_a", {rec.bg.color_a[0], rec.bg.color_a[1], rec.bg.color_a[2]}},
                       {"color_b", {rec.bg.color_b[0], rec.bg.color_b[1], rec.bg.color_b[2]}},
                       {"cells", rec.bg.cells},
                       {"noise_grid", rec.bg.noise_grid},
                       {"noise_seed", rec.bg.noise_seed}};
    j["has_foreground"] = rec.has_foreground;
    if (rec.has_foreground) j["foreground"] = fg_params_to_json(rec.fg);
    j["occlusion"] = rec.occlusion;
    return j;
}

AugmentationRecord augmentation_record_from_json(const json& j) {
    AugmentationRecord rec;
    rec.seed = j.at("seed").get<uint64_t>();
    const json& bg = j.at("background");
    rec.bg.family = bg_family_from_name(bg.at("family").get<std::string>());
    for (int i = 0; i < 3; ++i) rec.bg.color_a[i] = bg.at("color_a").at(i).get<double>();
    for (int i = 0; i < 3; ++i) rec.bg.color_b[i] = bg.at("color_b").at(i).get<double>();
    rec.bg.cells = bg.at("cells").get<int>();
    rec.bg.noise_grid = bg.at("noise_grid").get<int>();
    rec.bg.noise_seed = bg.at("noise_seed").get<uint64_t>();
    rec.has_foreground = j.at("has_foreground").get<bool>();
    if (rec.has_foreground) rec.fg = fg_params_from_json(j.at("foreground"));
    rec.occlusion = j.at("occlusion").get<double>();
    return rec;
}

std::vector<const TripletRecord*> DatasetManifest::split(const std::string& name) const {
    std::vector<const TripletRecord*> out;
    for (const auto& s : samples)
        if (s.split == name) out.push_back(&s);
    return out;
}

DatasetManifest build_dataset(const DatasetConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);

    DatasetManifest manifest;
    manifest.config = cfg;

    const Rng master(cfg.seed);
    char idbuf[32];

    for (int i = 0; i < cfg.count; ++i) {
        Rng child = master.child(static_cast<uint64_t>(i));
        std::snprintf(idbuf, sizeof idbuf, "s%06d", i);
        const std::string id = idbuf;

        const FigureSpec spec = FigureSpec::sample(child);
        const GarmentTexture top_tex = GarmentTexture::random(child);
        const GarmentTexture bottom_tex = GarmentTexture::random(child);
        const GarmentSlot slot = static_cast<GarmentSlot>(child.uniform_int(0, 1));
        GarmentTexture c_prime = GarmentTexture::random(child);
        const GarmentTexture& worn = slot == GarmentSlot::top ? top_tex : bottom_tex;
        while (c_prime.visually_equal(worn)) c_prime = GarmentTexture::random(child);

        const RenderedPerson rp =
            render_person(spec, top_tex, bottom_tex, cfg.resolution, cfg.resolution);
        const Mask& m = slot == GarmentSlot::top ? rp.m_top : rp.m_bottom;
        const Image p = rp.p;
        const Image p_prime = teacher_tryon(p, rp.pose, m, c_prime);
        const Image garment =
            render_garment_catalog(slot, worn, cfg.resolution, cfg.resolution);

        TripletRecord rec;
        rec.id = id;
        rec.seed = cfg.seed ^ detail::splitmix64_once(static_cast<uint64_t>(i));
        rec.slot = slot;
        rec.split = split_for(rec.seed);
        rec.augmented = cfg.augment;

        Image p_out = p, p_prime_out = p_prime;
        Mask m_out = m;
        json aug_json;
        if (cfg.augment) {
            try {
                AugmentedPair ap =
                    augment_pair(p, p_prime, rp.subject_alpha, m, child, cfg.aug);
                p_out = std::move(ap.p_aug);
                p_prime_out = std::move(ap.p_prime_aug);
                m_out = std::move(ap.m_aug);
                rec.occlusion = ap.record.occlusion;
                aug_json = augmentation_record_to_json(ap.record);
            } catch (const PlacementFailure& e) {
                std::cerr << "dataset: skipping " << id << ": " << e.what() << "\n";
                manifest.skipped.push_back(id);
                continue;
            }
        } else {
            aug_json = json{{"augmented", false}};
        }

        const fs::path dir = fs::path(cfg.out_dir) / id;
        fs::create_directories(dir);
        write_png((dir / "person.png").string(), p_out);
        write_png((dir / "person_prime.png").string(), p_prime_out);
        write_png((dir / "garment.png").string(), garment);
        write_png((dir / "pose.png").string(), rp.pose);
        write_mask_png((dir / "mask.png").string(), m_out);
        {
            std::ofstream out(dir / "aug.json");
            out << aug_json.dump(2) << "\n";
        }

        const char* names[] = {"person", "person_prime", "garment", "pose", "mask", "aug"};
        const char* fnames[] = {"person.png", "person_prime.png", "garment.png",
                                "pose.png",   "mask.png",         "aug.json"};
        for (int k = 0; k < 6; ++k) {
            rec.files[names[k]] = id + "/" + fnames[k];
            rec.hashes[names[k]] = to_hex(file_hash(dir / fnames[k]));
        }
        manifest.samples.push_back(std::move(rec));
    }

    json j;
    j["version"] = 1;
    j["config"] = {{"count", cfg.count},
                   {"seed", cfg.seed},
                   {"augment", cfg.augment},
                   {"resolution", cfg.resolution},
                   {"codec", cfg.codec},
                   {"rho_min", cfg.aug.fg.rho_min},
                   {"rho_max", cfg.aug.fg.rho_max},
                   {"foreground_prob", cfg.aug.foreground_prob}};
    json samples = json::array();
    for (const auto& s : manifest.samples) {
        json e;
        e["id"] = s.id;
        e["seed"] = s.seed;
        e["slot"] = slot_name(s.slot);
        e["split"] = s.split;
        e["augmented"] = s.augmented;
        e["occlusion"] = s.occlusion;
        e["files"] = s.files;
        e["hashes"] = s.hashes;
        samples.push_back(std::move(e));
    }
    j["samples"] = std::move(samples);
    j["skipped"] = manifest.skipped;
    std::ofstream out(fs::path(cfg.out_dir) / "manifest.json");
    out << j.dump(2) << "\n";

    return manifest;
}

DatasetManifest load_manifest(const std::string& root) {
    std::ifstream in(fs::path(root) / "manifest.json");
    require(in.good(), "cannot open manifest: " + root);
    json j;
    in >> j;

    DatasetManifest m;
    m.config.count = j.at("config").at("count").get<int>();
    m.config.seed = j.at("config").at("seed").get<uint64_t>();
    m.config.augment = j.at("config").at("augment").get<bool>();
    m.config.resolution = j.at("config").at("resolution").get<int>();
    m.config.codec = j.at("config").at("codec").get<std::string>();
    m.config.aug.fg.rho_min = j.at("config").at("rho_min").get<double>();
    m.config.aug.fg.rho_max = j.at("config").at("rho_max").get<double>();
    m.config.aug.foreground_prob = j.at("config").at("foreground_prob").get<double>();
    m.config.out_dir = root;
    for (const auto& e : j.at("samples")) {
        TripletRecord r;
        r.id = e.at("id").get<std::string>();
        r.seed = e.at("seed").get<uint64_t>();
        r.slot = slot_from_name(e.at("slot").get<std::string>());
        r.split = e.at("split").get<std::string>();
        r.augmented = e.at("augmented").get<bool>();
        r.occlusion = e.at("occlusion").get<double>();
        for (auto it = e.at("files").begin(); it != e.at("files").end(); ++it)
            r.files[it.key()] = it.value().get<std::string>();
        for (auto it = e.at("hashes").begin(); it != e.at("hashes").end(); ++it)
            r.hashes[it.key()] = it.value().get<std::string>();
        m.samples.push_back(std::move(r));
    }
    if (j.contains("skipped"))
        for (const auto& s : j.at("skipped")) m.skipped.push_back(s.get<std::string>());
    return m;
}

TryOnTriplet load_triplet(const std::string& root, const TripletRecord& rec) {
    const fs::path base(root);
    for (const auto& [name, rel] : rec.files) {
        const auto it = rec.hashes.find(name);
        require(it != rec.hashes.end(), "load_triplet: missing hash for " + name);
        const std::string actual = to_hex(file_hash(base / rel));
        require(actual == it->second,
                "load_triplet: hash mismatch for " + rel + " (corrupt or tampered file)");
    }

    TryOnTriplet t;
    t.id = rec.id;
    t.seed = rec.seed;
    t.slot = rec.slot;
    t.p = read_png((base / rec.files.at("person")).string());
    t.p_prime = read_png((base / rec.files.at("person_prime")).string());
    t.garment = read_png((base / rec.files.at("garment")).string());
    t.pose = read_png((base / rec.files.at("pose")).string());
    t.m = read_mask_png((base / rec.files.at("mask")).string());

    std::ifstream in(base / rec.files.at("aug"));
    json aj;
    in >> aj;
    if (!aj.contains("augmented")) t.aug = augmentation_record_from_json(aj);
    return t;
}

}  // namespace tryon
