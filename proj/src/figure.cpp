#include "tryon/figure.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <vector>

#include "tryon/common.hpp"
#include "tryon/png_io.hpp"

namespace tryon {

namespace {

double hash01(uint64_t seed, int64_t x, int64_t y) {
    uint64_t st = seed ^ (0x9e3779b97f4a7c15ull * static_cast<uint64_t>(x + 0x10001)) ^
                  (0xc2b2ae3d27d4eb4full * static_cast<uint64_t>(y + 0x20003));
    return static_cast<double>(detail::splitmix64(st) >> 11) * 0x1.0p-53;
}

}  // namespace

GarmentTexture GarmentTexture::random(Rng& rng) {
    GarmentTexture t;
    t.kind = static_cast<Kind>(rng.uniform_int(0, 3));
    for (double& c : t.color_a) c = rng.uniform(0.05, 0.95);
    for (double& c : t.color_b) c = rng.uniform(0.05, 0.95);
    t.scale = rng.uniform(3.0, 8.0);
    const int dir = static_cast<int>(rng.uniform_int(0, 3));
    t.angle = dir * 0.7853981633974483;  // multiples of pi/4
    t.seed = rng.next();
    return t;
}

void GarmentTexture::color_at(int x, int y, double out[3]) const {
    switch (kind) {
        case Kind::flat:
            for (int i = 0; i < 3; ++i) out[i] = color_a[i];
            return;
        case Kind::stripes: {
            const double u = x * std::cos(angle) + y * std::sin(angle);
            const int band = static_cast<int>(std::floor(u / scale));
            const double* c = ((band % 2) + 2) % 2 == 0 ? color_a : color_b;
            for (int i = 0; i < 3; ++i) out[i] = c[i];
            return;
        }
        case Kind::checker: {
            const int cxi = static_cast<int>(std::floor(x / scale));
            const int cyi = static_cast<int>(std::floor(y / scale));
            const double* c = (((cxi + cyi) % 2) + 2) % 2 == 0 ? color_a : color_b;
            for (int i = 0; i < 3; ++i) out[i] = c[i];
            return;
        }
        case Kind::noise: {
            const int64_t cxi = static_cast<int64_t>(std::floor(x / scale));
            const int64_t cyi = static_cast<int64_t>(std::floor(y / scale));
            const double t = hash01(seed, cxi, cyi);
            for (int i = 0; i < 3; ++i) out[i] = color_a[i] * (1.0 - t) + color_b[i] * t;
            return;
        }
    }
}

bool GarmentTexture::visually_equal(const GarmentTexture& o) const {
    if (kind != o.kind) return false;
    for (int i = 0; i < 3; ++i)
        if (std::abs(color_a[i] - o.color_a[i]) > 1e-3 ||
            std::abs(color_b[i] - o.color_b[i]) > 1e-3)
            return false;
    return true;
}

FigureSpec FigureSpec::sample(Rng& rng) {
    FigureSpec s;
    s.cx = rng.uniform(0.44, 0.56);
    s.head_cy = rng.uniform(0.12, 0.16);
    s.head_r = rng.uniform(0.055, 0.08);
    s.torso_cy = rng.uniform(0.35, 0.39);
    s.torso_rx = rng.uniform(0.14, 0.18);
    s.torso_ry = rng.uniform(0.16, 0.19);
    s.arm_angle_l = rng.uniform(0.1, 0.55);
    s.arm_angle_r = rng.uniform(0.1, 0.55);
    s.arm_len = rng.uniform(0.2, 0.26);
    s.arm_w = rng.uniform(0.028, 0.042);
    s.hip_cy = rng.uniform(0.60, 0.64);
    s.hip_rx = rng.uniform(0.13, 0.17);
    s.hip_ry = rng.uniform(0.11, 0.15);
    s.leg_spread = rng.uniform(0.05, 0.08);
    s.leg_bottom = rng.uniform(0.90, 0.95);
    s.leg_w = rng.uniform(0.034, 0.046);
    s.skin[0] = rng.uniform(0.7, 0.95);
    s.skin[1] = s.skin[0] * rng.uniform(0.72, 0.85);
    s.skin[2] = s.skin[1] * rng.uniform(0.7, 0.85);
    for (double& c : s.hair) c = rng.uniform(0.05, 0.45);
    s.top_quad[0] = rng.uniform(0.17, 0.21);
    s.top_quad[1] = rng.uniform(0.19, 0.23);
    s.top_quad[2] = rng.uniform(0.24, 0.27);
    s.top_quad[3] = rng.uniform(0.52, 0.56);
    s.bottom_quad[0] = rng.uniform(0.15, 0.19);
    s.bottom_quad[1] = rng.uniform(0.12, 0.16);
    s.bottom_quad[2] = rng.uniform(0.55, 0.58);
    s.bottom_quad[3] = rng.uniform(0.78, 0.84);
    return s;
}

namespace {

// Body parts, in priority order (first hit wins for the pose map).
struct Part {
    int id;          // 1-based, 0 is background
    double cx, cy;   // center
    double rx, ry;   // half-axes
    double angle;    // rotation
};

std::vector<Part> body_parts(const FigureSpec& s) {
    std::vector<Part> parts;
    parts.push_back({1, s.cx, s.head_cy, s.head_r, s.head_r, 0.0});  // head
    // arms hang from the shoulders, rotated outward from vertical
    const double sh_y = s.torso_cy - s.torso_ry * 0.75;
    for (int side = 0; side < 2; ++side) {
        const double sgn = side == 0 ? -1.0 : 1.0;
        const double ang = side == 0 ? s.arm_angle_l : s.arm_angle_r;
        const double dx = sgn * std::sin(ang), dy = std::cos(ang);
        const double sx = s.cx + sgn * s.torso_rx * 0.95;
        parts.push_back({3 + side, sx + dx * s.arm_len * 0.5, sh_y + dy * s.arm_len * 0.5,
                         s.arm_len * 0.55, s.arm_w, std::atan2(dy, dx)});
    }
    for (int side = 0; side < 2; ++side) {  // lower legs
        const double sgn = side == 0 ? -1.0 : 1.0;
        const double lx = s.cx + sgn * s.leg_spread;
        const double mid = (s.leg_top + s.leg_bottom) * 0.5;
        parts.push_back({6 + side, lx, mid, s.leg_w, (s.leg_bottom - s.leg_top) * 0.55,
                         1.5707963267948966});
    }
    parts.push_back({5, s.cx, s.hip_cy, s.hip_rx, s.hip_ry, 0.0});             // hips
    parts.push_back({2, s.cx, s.torso_cy, s.torso_rx, s.torso_ry, 0.0});       // torso
    return parts;
}

// Rotated-ellipse membership with local coordinates in [-1, 1].
bool part_local(const Part& p, double u, double v, double& lu, double& lv) {
    const double ca = std::cos(p.angle), sa = std::sin(p.angle);
    const double du = u - p.cx, dv = v - p.cy;
    const double ru = ca * du + sa * dv;
    const double rv = -sa * du + ca * dv;
    lu = ru / p.rx;
    lv = rv / p.ry;
    return lu * lu + lv * lv <= 1.0;
}

bool in_quad(const double q[4], double cx, double u, double v) {
    if (v < q[2] || v > q[3]) return false;
    const double t = (v - q[2]) / (q[3] - q[2]);
    const double half = q[0] * (1.0 - t) + q[1] * t;
    return std::abs(u - cx) <= half;
}

constexpr int kNumParts = 7;

}  // namespace

RenderedPerson render_person(const FigureSpec& spec, const GarmentTexture& top,
                             const GarmentTexture& bottom, int h, int w) {
    require(h >= 32 && w >= 32, "render_person: resolution too small for the figure family");
    const std::vector<Part> parts = body_parts(spec);

    // part id per pixel (0 = background)
    std::vector<int> part_id(static_cast<size_t>(h) * w, 0);
    std::vector<double> lu_map(part_id.size(), 0.0), lv_map(part_id.size(), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double u = (x + 0.5) / w, v = (y + 0.5) / h;
            for (const Part& p : parts) {
                double lu, lv;
                if (part_local(p, u, v, lu, lv)) {
                    const size_t i = static_cast<size_t>(y) * w + x;
                    part_id[i] = p.id;
                    lu_map[i] = lu;
                    lv_map[i] = lv;
                    break;
                }
            }
        }

    // silhouette erosion (4-neighborhood) keeps garments strictly inside
    auto solid = [&](int y, int x) {
        return y >= 0 && y < h && x >= 0 && x < w && part_id[static_cast<size_t>(y) * w + x] != 0;
    };
    std::vector<uint8_t> eroded(part_id.size(), 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            eroded[static_cast<size_t>(y) * w + x] =
                solid(y, x) && solid(y - 1, x) && solid(y + 1, x) && solid(y, x - 1) &&
                        solid(y, x + 1)
                    ? 1
                    : 0;

    RenderedPerson rp;
    rp.p = Image(h, w, 3, 1.0);  // white background
    rp.pose = Image(h, w, 3, 0.0);
    rp.m_top = Mask(h, w);
    rp.m_bottom = Mask(h, w);
    rp.subject_alpha = Image(h, w, 1, 0.0);

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            const int id = part_id[i];
            if (id == 0) continue;
            const double u = (x + 0.5) / w, v = (y + 0.5) / h;
            rp.subject_alpha.at(y, x, 0) = 1.0;
            rp.pose.at(y, x, 0) = static_cast<double>(id) / kNumParts;
            rp.pose.at(y, x, 1) = (lu_map[i] + 1.0) * 0.5;
            rp.pose.at(y, x, 2) = (lv_map[i] + 1.0) * 0.5;

            const bool hair = id == 1 && v < spec.head_cy;
            const double* base = hair ? spec.hair : spec.skin;
            double col[3] = {base[0], base[1], base[2]};
            if (eroded[i] && in_quad(spec.top_quad, spec.cx, u, v)) {
                rp.m_top.at(y, x) = 1;
                top.color_at(x, y, col);
            } else if (eroded[i] && in_quad(spec.bottom_quad, spec.cx, u, v)) {
                rp.m_bottom.at(y, x) = 1;
                bottom.color_at(x, y, col);
            }
            for (int ch = 0; ch < 3; ++ch) rp.p.at(y, x, ch) = col[ch];
        }

    require(rp.m_top.count() > 0, "render_person: degenerate top garment polygon");
    require(rp.m_bottom.count() > 0, "render_person: degenerate bottom garment polygon");
    return rp;
}

Image teacher_tryon(const Image& p, const Image& pose, const Mask& m,
                    const GarmentTexture& c_prime) {
    require(p.c == 3, "teacher_tryon: person must be RGB");
    require(p.h == m.h && p.w == m.w, "teacher_tryon: mask resolution mismatch");
    require(pose.h == p.h && pose.w == p.w, "teacher_tryon: pose resolution mismatch");
    Image out = p;
    for (int y = 0; y < p.h; ++y)
        for (int x = 0; x < p.w; ++x) {
            if (!m.at(y, x)) continue;
            double col[3];
            c_prime.color_at(x, y, col);
            for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = col[ch];
        }
    return out;
}

Image render_garment_catalog(GarmentSlot slot, const GarmentTexture& tex, int h, int w) {
    // canonical slot silhouettes, independent of any particular figure
    const double top_quad[4] = {0.26, 0.30, 0.22, 0.66};
    const double bottom_quad[4] = {0.28, 0.20, 0.24, 0.72};
    const double* q = slot == GarmentSlot::top ? top_quad : bottom_quad;

    Image img(h, w, 3, 1.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double u = (x + 0.5) / w, v = (y + 0.5) / h;
            if (!in_quad(q, 0.5, u, v)) continue;
            // bottoms get a center notch so the two slots are unambiguous
            if (slot == GarmentSlot::bottom && v > 0.5 && std::abs(u - 0.5) < 0.045) continue;
            double col[3];
            tex.color_at(x, y, col);
            for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = col[ch];
        }
    return img;
}

Image external_teacher_tryon(const std::string& command, const Image& p, const Image& pose,
                             const Mask& m, const Image& garment_catalog) {
    namespace fs = std::filesystem;
    const fs::path dir =
        fs::temp_directory_path() / ("tryon_teacher_" + to_hex(fnv1a64(&p.v[0], 8)));
    fs::create_directories(dir);
    write_png((dir / "person.png").string(), p);
    write_png((dir / "pose.png").string(), pose);
    write_mask_png((dir / "mask.png").string(), m);
    write_png((dir / "garment.png").string(), garment_catalog);
    const std::string cmd = command + " " + dir.string();
    const int rc = std::system(cmd.c_str());
    require(rc == 0, "external teacher command failed: " + cmd);
    Image out = read_png((dir / "out.png").string());
    fs::remove_all(dir);
    return out;
}

std::string slot_name(GarmentSlot s) { return s == GarmentSlot::top ? "top" : "bottom"; }

GarmentSlot slot_from_name(const std::string& name) {
    if (name == "top") return GarmentSlot::top;
    if (name == "bottom") return GarmentSlot::bottom;
    throw ContractError("unknown garment slot: " + name);
}

}  // namespace tryon
