#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tryon/augment.hpp"
#include "tryon/figure.hpp"
#include "tryon/tensor.hpp"

namespace tryon {

using json = nlohmann::json;

struct DatasetConfig {
    int count = 100;
    uint64_t seed = 1;
    bool augment = false;
    int resolution = 48;
    std::string codec = "identity";
    AugmentConfig aug;
    std::string out_dir;

    void validate() const;
};

// One manifest entry. File paths are relative to the dataset root; hashes are
// FNV-1a over the raw file bytes.
struct TripletRecord {
    std::string id;
    uint64_t seed = 0;
    GarmentSlot slot = GarmentSlot::top;
    std::string split;  // train | val | test
    bool augmented = false;
    double occlusion = 0.0;
    std::map<std::string, std::string> files;   // logical name -> relative path
    std::map<std::string, std::string> hashes;  // logical name -> hex hash
};

struct DatasetManifest {
    DatasetConfig config;
    std::vector<TripletRecord> samples;
    std::vector<std::string> skipped;  // ids dropped for placement failure

    std::vector<const TripletRecord*> split(const std::string& name) const;
};

struct TryOnTriplet {
    std::string id;
    uint64_t seed = 0;
    GarmentSlot slot = GarmentSlot::top;
    Image p;        // ground-truth person (augmented when the dataset is)
    Image p_prime;  // source person wearing a different garment
    Image garment;  // catalog image of the garment worn in p
    Image pose;
    Mask m;         // try-on mask (occluder-shrunk when augmented)
    std::optional<AugmentationRecord> aug;
};

// Writes triplets + manifest.json under cfg.out_dir. Fully reproducible:
// equal (seed, config) gives a byte-identical directory tree.
DatasetManifest build_dataset(const DatasetConfig& cfg);

DatasetManifest load_manifest(const std::string& root);

// Loads and hash-verifies one triplet.
TryOnTriplet load_triplet(const std::string& root, const TripletRecord& rec);

json augmentation_record_to_json(const AugmentationRecord& rec);
AugmentationRecord augmentation_record_from_json(const json& j);

// Split assignment by sample seed: 80/10/10.
std::string split_for(uint64_t sample_seed);

}  // namespace tryon
