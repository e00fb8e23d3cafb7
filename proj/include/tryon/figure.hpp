#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "tryon/rng.hpp"
#include "tryon/tensor.hpp"

namespace tryon {

// Procedural garment texture. Pure function of (pixel coords, params), so the
// teacher can repaint a garment region exactly.
struct GarmentTexture {
    enum class Kind { flat, stripes, checker, noise };
    Kind kind = Kind::flat;
    double color_a[3] = {0.5, 0.2, 0.2};
    double color_b[3] = {0.9, 0.9, 0.9};
    double scale = 4.0;   // pattern period in pixels
    double angle = 0.0;   // stripe direction
    uint64_t seed = 1;    // noise lattice seed

    static GarmentTexture random(Rng& rng);
    void color_at(int x, int y, double out[3]) const;
    bool visually_equal(const GarmentTexture& o) const;
};

// Garment slot on the figure: top (torso) or bottom (hips/legs).
enum class GarmentSlot { top = 0, bottom = 1 };

// Stylized person: ellipse/capsule body parts plus one garment quad per slot.
// All coordinates are normalized to [0,1]; rasterization is analytic
// per-pixel, so renders are deterministic at any resolution.
struct FigureSpec {
    double cx = 0.5;
    double head_cy = 0.14, head_r = 0.07;
    double torso_cy = 0.37, torso_rx = 0.16, torso_ry = 0.175;
    double arm_angle_l = 0.25, arm_angle_r = 0.25;  // radians from vertical
    double arm_len = 0.23, arm_w = 0.035;
    double hip_cy = 0.62, hip_rx = 0.15, hip_ry = 0.13;
    double leg_spread = 0.065, leg_top = 0.66, leg_bottom = 0.93, leg_w = 0.04;
    double skin[3] = {0.85, 0.68, 0.55};
    double hair[3] = {0.25, 0.15, 0.1};
    // garment quads: {half-width top edge, half-width bottom edge, y top, y bottom}
    double top_quad[4] = {0.19, 0.21, 0.25, 0.54};
    double bottom_quad[4] = {0.17, 0.14, 0.56, 0.80};

    static FigureSpec sample(Rng& rng);
};

struct RenderedPerson {
    Image p;              // RGB person on white
    Image pose;           // part-index / part-local-coordinate map
    Mask m_top, m_bottom; // per-slot try-on masks
    Image subject_alpha;  // single-channel silhouette
};

// Rasterizes the figure wearing the two garment textures. The garment masks
// are the garment quads clipped to the eroded silhouette, so they sit
// strictly inside the subject.
RenderedPerson render_person(const FigureSpec& spec, const GarmentTexture& top,
                             const GarmentTexture& bottom, int h, int w);

// Exact mask-based teacher: repaints the pixels inside m with c_prime's
// texture and leaves everything else bit-identical. pose is part of the
// teacher interface but unused by the exact compositor.
Image teacher_tryon(const Image& p, const Image& pose, const Mask& m,
                    const GarmentTexture& c_prime);

// In-shop style catalog image: the slot's canonical silhouette filled with
// the texture, centered on white. Shape encodes the slot so a garment image
// alone tells the model where it belongs.
Image render_garment_catalog(GarmentSlot slot, const GarmentTexture& tex, int h, int w);

// Mask-based try-on behind a process boundary: writes person/pose/mask/
// garment PNGs to a scratch directory, runs `command <dir>`, reads
// <dir>/out.png. Lets any external mask-based model stand in as teacher.
Image external_teacher_tryon(const std::string& command, const Image& p, const Image& pose,
                             const Mask& m, const Image& garment_catalog);

std::string slot_name(GarmentSlot s);
GarmentSlot slot_from_name(const std::string& name);

}  // namespace tryon
