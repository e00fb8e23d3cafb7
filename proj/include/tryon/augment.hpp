#pragma once

#include <cstdint>
#include <string>

#include "tryon/rng.hpp"
#include "tryon/tensor.hpp"

namespace tryon {

// Background / subject / foreground stack; composed bottom-to-top.
struct LayeredScene {
    Image background;       // RGB
    Image subject;          // RGBA (person with subject alpha)
    Image foreground;       // RGBA occluder canvas
};

struct BackgroundSpec {
    enum class Family { gradient, checker, noise_field };
    Family family = Family::gradient;
    double color_a[3] = {0.2, 0.3, 0.6};
    double color_b[3] = {0.8, 0.7, 0.4};
    int cells = 4;            // checker cell count per side
    int noise_grid = 6;       // value-noise lattice size
    uint64_t noise_seed = 1;  // lattice values derive from this, not from a live rng
    static BackgroundSpec random(Rng& rng);
};

struct ForegroundSpec {
    double rho_min = 0.05;  // occlusion fraction bounds over the try-on mask
    double rho_max = 0.4;
    double size_min = 0.12;  // occluder extent as a fraction of image side
    double size_max = 0.35;
    int max_retries = 100;
};

// Resolved foreground parameters; enough to re-render the occluder alpha
// without the person images.
struct ForegroundParams {
    int shape = 0;           // 0 ellipse, 1 polygon, 2 strip
    double cx = 0, cy = 0;   // center in [0,1] image coords
    double rx = 0, ry = 0;   // extent
    double angle = 0;        // strip/polygon orientation
    int sides = 5;           // polygon vertex count
    double color_a[3] = {0, 0, 0};
    double color_b[3] = {0, 0, 0};
    int texture = 0;         // 0 flat, 1 stripes
    double stripe_period = 6.0;
};

// Everything needed to replay one augmentation bit-exactly.
struct AugmentationRecord {
    uint64_t seed = 0;
    BackgroundSpec bg;
    ForegroundParams fg;
    bool has_foreground = false;
    double occlusion = 0.0;  // fraction of try-on mask pixels under the occluder
};

struct AugmentConfig {
    BackgroundSpec::Family bg_families[3] = {BackgroundSpec::Family::gradient,
                                             BackgroundSpec::Family::checker,
                                             BackgroundSpec::Family::noise_field};
    ForegroundSpec fg;
    double foreground_prob = 1.0;  // probability a sample gets an occluder
};

struct AugmentedPair {
    Image p_aug, p_prime_aug;
    Mask m_aug;
    AugmentationRecord record;
};

// Alpha-over composition, bottom-to-top:
//   out = Fa*Frgb + (1-Fa) * (Sa*Srgb + (1-Sa)*B)
Image composite(const LayeredScene& scene);

// M'(i,j) = M(i,j) AND (F_alpha(i,j) == 0): any positive foreground alpha
// becomes non-try-on.
Mask update_mask(const Mask& m, const Image& fg_alpha);

// Pure function of the spec; randomness enters through BackgroundSpec::random.
Image gen_background(const BackgroundSpec& spec, int h, int w);

// RGB + single-channel alpha -> RGBA.
Image make_rgba(const Image& rgb, const Image& alpha);

struct Foreground {
    Image rgba;
    ForegroundParams params;
    double occlusion = 0.0;
};

// Textured random occluder with hard alpha; placement rejects draws whose
// occlusion of the try-on mask falls outside [rho_min, rho_max]. Throws
// PlacementFailure after max_retries.
Foreground gen_foreground(Rng& rng, const ForegroundSpec& spec, const Mask& m);

Image render_foreground(const ForegroundParams& params, int h, int w);

// Applies one background and (optionally) one occluder identically to both
// members of the pair and shrinks the try-on mask under the occluder.
AugmentedPair augment_pair(const Image& p, const Image& p_prime, const Image& subject_alpha,
                           const Mask& m, Rng& rng, const AugmentConfig& cfg);

// Bit-exact replay from a record.
AugmentedPair replay_augment(const AugmentationRecord& rec, const Image& p, const Image& p_prime,
                             const Image& subject_alpha, const Mask& m);

// JSON (de)serialization of records lives with the dataset code; these helpers
// keep the spec stable.
std::string bg_family_name(BackgroundSpec::Family f);
BackgroundSpec::Family bg_family_from_name(const std::string& name);

}  // namespace tryon
