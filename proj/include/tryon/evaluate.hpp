#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tryon/checkpoint.hpp"
#include "tryon/metrics.hpp"
#include "tryon/sampler.hpp"
#include "tryon/train.hpp"

namespace tryon {

struct EvalConfig {
    std::string test_dataset;  // dataset root; the test split is evaluated
    int sample_steps = 50;
    SampleMode mode = SampleMode::deterministic;
    uint64_t seed = 1234;
    int feature_dim = 32;
    uint64_t extractor_seed = 17;
    int attn_probes = 4;       // (t, eps) draws per sample for attention mass
    int kid_bootstrap = 100;
    std::string generated_dir;  // when set, load generated images instead of sampling
    std::string dump_dir;       // when set, save generated images here
};

// Distribution metrics between two image sets (no sampling involved).
nlohmann::json evaluate_image_sets(const std::vector<Image>& real,
                                   const std::vector<Image>& generated, int feature_dim,
                                   uint64_t extractor_seed, int kid_bootstrap,
                                   uint64_t kid_seed);

// Unpaired evaluation of a trained checkpoint on a dataset's test split:
// each test person is re-dressed with a garment worn by a different test
// sample (same slot), then FID/KID against the real test images, region
// preservation MAE, occluder-pixel MAE and attention-outside-mask mass are
// reported.
nlohmann::json evaluate(const Checkpoint& ckpt, const EvalConfig& cfg);

struct AblateConfig {
    std::string out_root;
    uint64_t data_seed = 11;
    int data_count = 600;
    TrainConfig tmpl;       // shared training hyperparameters
    EvalConfig eval_tmpl;   // shared evaluation settings
    bool reuse_existing = false;  // reuse datasets/checkpoints already present
};

// Runs the three ablation arms end-to-end (dataset generation, training,
// evaluation on the shared augmented test split) and writes
// <out_root>/ablation_report.json.
nlohmann::json ablate(const AblateConfig& cfg);

}  // namespace tryon
