#include "tryon/augment.hpp"

#include <cmath>

#include "tryon/common.hpp"

namespace tryon {

namespace {

Image transparent_canvas(int h, int w) { return Image(h, w, 4, 0.0); }

double value_noise(const std::vector<double>& lattice, int grid, double u, double v) {
    // bilinear interpolation over a (grid+1)^2 lattice
    const double gx = u * grid, gy = v * grid;
    const int x0 = std::min(static_cast<int>(gx), grid - 1);
    const int y0 = std::min(static_cast<int>(gy), grid - 1);
    const double fx = gx - x0, fy = gy - y0;
    auto at = [&](int yy, int xx) { return lattice[static_cast<size_t>(yy) * (grid + 1) + xx]; };
    const double top = at(y0, x0) * (1 - fx) + at(y0, x0 + 1) * fx;
    const double bot = at(y0 + 1, x0) * (1 - fx) + at(y0 + 1, x0 + 1) * fx;
    return top * (1 - fy) + bot * fy;
}

}  // namespace

std::string bg_family_name(BackgroundSpec::Family f) {
    switch (f) {
        case BackgroundSpec::Family::gradient: return "gradient";
        case BackgroundSpec::Family::checker: return "checker";
        case BackgroundSpec::Family::noise_field: return "noise_field";
    }
    throw ContractError("bad background family");
}

BackgroundSpec::Family bg_family_from_name(const std::string& name) {
    if (name == "gradient") return BackgroundSpec::Family::gradient;
    if (name == "checker") return BackgroundSpec::Family::checker;
    if (name == "noise_field") return BackgroundSpec::Family::noise_field;
    throw ContractError("unknown background pattern family: " + name);
}

BackgroundSpec BackgroundSpec::random(Rng& rng) {
    BackgroundSpec s;
    const int fam = static_cast<int>(rng.uniform_int(0, 2));
    s.family = static_cast<Family>(fam);
    for (double& c : s.color_a) c = rng.uniform(0.08, 0.92);
    for (double& c : s.color_b) c = rng.uniform(0.08, 0.92);
    s.cells = static_cast<int>(rng.uniform_int(2, 6));
    s.noise_grid = static_cast<int>(rng.uniform_int(4, 8));
    s.noise_seed = rng.next();
    return s;
}

Image gen_background(const BackgroundSpec& spec, int h, int w) {
    Image img(h, w, 3);
    switch (spec.family) {
        case BackgroundSpec::Family::gradient: {
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double t = (h + w) > 2 ? static_cast<double>(x + y) / (h + w - 2) : 0.0;
                    for (int ch = 0; ch < 3; ++ch)
                        img.at(y, x, ch) =
                            spec.color_a[ch] * (1.0 - t) + spec.color_b[ch] * t;
                }
            break;
        }
        case BackgroundSpec::Family::checker: {
            require(spec.cells >= 1, "gen_background: checker needs >= 1 cell");
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const int cy = y * spec.cells / h, cx = x * spec.cells / w;
                    const double* col = (cx + cy) % 2 == 0 ? spec.color_a : spec.color_b;
                    for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = col[ch];
                }
            break;
        }
        case BackgroundSpec::Family::noise_field: {
            const int g = spec.noise_grid;
            require(g >= 1, "gen_background: noise grid must be >= 1");
            Rng noise_rng(spec.noise_seed);
            std::vector<double> lattice(static_cast<size_t>(g + 1) * (g + 1));
            for (double& v : lattice) v = noise_rng.uniform();
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double t =
                        value_noise(lattice, g, (x + 0.5) / w, (y + 0.5) / h);
                    for (int ch = 0; ch < 3; ++ch)
                        img.at(y, x, ch) =
                            spec.color_a[ch] * (1.0 - t) + spec.color_b[ch] * t;
                }
            break;
        }
    }
    return img;
}

Image composite(const LayeredScene& scene) {
    const Image& b = scene.background;
    const Image& s = scene.subject;
    const Image& f = scene.foreground;
    require(b.c == 3, "composite: background must be RGB");
    require(s.c == 4 && f.c == 4, "composite: subject and foreground must be RGBA");
    require(b.h == s.h && b.w == s.w && b.h == f.h && b.w == f.w,
            "composite: layer resolution mismatch");

    Image out(b.h, b.w, 3);
    for (int y = 0; y < b.h; ++y)
        for (int x = 0; x < b.w; ++x) {
            const double sa = s.at(y, x, 3);
            const double fa = f.at(y, x, 3);
            for (int ch = 0; ch < 3; ++ch) {
                const double base = sa * s.at(y, x, ch) + (1.0 - sa) * b.at(y, x, ch);
                out.at(y, x, ch) = fa * f.at(y, x, ch) + (1.0 - fa) * base;
            }
        }
    return out;
}

Mask update_mask(const Mask& m, const Image& fg_alpha) {
    require(fg_alpha.h == m.h && fg_alpha.w == m.w, "update_mask: resolution mismatch");
    require(fg_alpha.c == 1 || fg_alpha.c == 4, "update_mask: need alpha or RGBA input");
    const int ach = fg_alpha.c == 4 ? 3 : 0;
    Mask out(m.h, m.w);
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x)
            out.at(y, x) = (m.at(y, x) != 0 && fg_alpha.at(y, x, ach) == 0.0) ? 1 : 0;
    return out;
}

Image render_foreground(const ForegroundParams& p, int h, int w) {
    Image canvas = transparent_canvas(h, w);
    const double ca = std::cos(p.angle), sa = std::sin(p.angle);

    // polygon vertices (regular n-gon stretched by rx/ry, rotated)
    std::vector<double> vx, vy;
    if (p.shape == 1) {
        vx.resize(static_cast<size_t>(p.sides));
        vy.resize(static_cast<size_t>(p.sides));
        for (int i = 0; i < p.sides; ++i) {
            const double th = 2.0 * M_PI * i / p.sides;
            const double ex = p.rx * std::cos(th), ey = p.ry * std::sin(th);
            vx[static_cast<size_t>(i)] = p.cx + ca * ex - sa * ey;
            vy[static_cast<size_t>(i)] = p.cy + sa * ex + ca * ey;
        }
    }

    auto inside = [&](double u, double v) -> bool {
        switch (p.shape) {
            case 0: {  // ellipse
                const double du = (u - p.cx) / p.rx, dv = (v - p.cy) / p.ry;
                return du * du + dv * dv <= 1.0;
            }
            case 1: {  // polygon, even-odd rule
                bool in = false;
                const size_t n = vx.size();
                for (size_t i = 0, j = n - 1; i < n; j = i++) {
                    if ((vy[i] > v) != (vy[j] > v) &&
                        u < (vx[j] - vx[i]) * (v - vy[i]) / (vy[j] - vy[i]) + vx[i])
                        in = !in;
                }
                return in;
            }
            case 2: {  // strip: rotated rectangle
                const double du = u - p.cx, dv = v - p.cy;
                const double lu = ca * du + sa * dv;
                const double lv = -sa * du + ca * dv;
                return std::abs(lu) <= p.rx && std::abs(lv) <= p.ry;
            }
            default: throw ContractError("render_foreground: bad shape id");
        }
    };

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double u = (x + 0.5) / w, v = (y + 0.5) / h;
            if (!inside(u, v)) continue;
            const double* col = p.color_a;
            if (p.texture == 1) {
                const int band = static_cast<int>(
                    std::floor((x * ca + y * sa) / p.stripe_period));
                col = ((band % 2) + 2) % 2 == 0 ? p.color_a : p.color_b;
            }
            for (int ch = 0; ch < 3; ++ch) canvas.at(y, x, ch) = col[ch];
            canvas.at(y, x, 3) = 1.0;  // hard alpha
        }
    return canvas;
}

Foreground gen_foreground(Rng& rng, const ForegroundSpec& spec, const Mask& m) {
    require(spec.rho_min >= 0.0 && spec.rho_min <= spec.rho_max && spec.rho_max <= 1.0,
            "gen_foreground: need 0 <= rho_min <= rho_max <= 1");

    Foreground fg;
    if (spec.rho_max == 0.0) {
        fg.rgba = transparent_canvas(m.h, m.w);
        fg.params.shape = -1;  // marks "no occluder"
        return fg;
    }

    const double mask_area = static_cast<double>(m.count());
    require(mask_area > 0.0, "gen_foreground: empty try-on mask");

    for (int attempt = 0; attempt < spec.max_retries; ++attempt) {
        ForegroundParams p;
        p.shape = static_cast<int>(rng.uniform_int(0, 2));
        p.cx = rng.uniform(0.15, 0.85);
        p.cy = rng.uniform(0.15, 0.85);
        p.rx = rng.uniform(spec.size_min, spec.size_max);
        p.ry = rng.uniform(spec.size_min, spec.size_max);
        p.angle = rng.uniform(0.0, M_PI);
        p.sides = static_cast<int>(rng.uniform_int(3, 7));
        if (p.shape == 2) p.ry = rng.uniform(0.03, 0.10);  // strips are thin bars
        for (int i = 0; i < 3; ++i) p.color_a[i] = rng.uniform(0.05, 0.95);
        for (int i = 0; i < 3; ++i) p.color_b[i] = rng.uniform(0.05, 0.95);
        p.texture = static_cast<int>(rng.uniform_int(0, 1));
        p.stripe_period = rng.uniform(3.0, 8.0);

        Image canvas = render_foreground(p, m.h, m.w);
        size_t covered = 0;
        for (int y = 0; y < m.h; ++y)
            for (int x = 0; x < m.w; ++x)
                if (m.at(y, x) && canvas.at(y, x, 3) > 0.0) ++covered;
        const double occ = static_cast<double>(covered) / mask_area;
        if (occ >= spec.rho_min && occ <= spec.rho_max) {
            fg.rgba = std::move(canvas);
            fg.params = p;
            fg.occlusion = occ;
            return fg;
        }
    }
    throw PlacementFailure("gen_foreground: no placement met the occlusion bounds after " +
                           std::to_string(spec.max_retries) + " retries");
}

Image make_rgba(const Image& rgb, const Image& alpha) {
    require(rgb.c == 3 && alpha.c == 1, "make_rgba: need RGB + single-channel alpha");
    require(rgb.h == alpha.h && rgb.w == alpha.w, "make_rgba: resolution mismatch");
    Image out(rgb.h, rgb.w, 4);
    for (int y = 0; y < rgb.h; ++y)
        for (int x = 0; x < rgb.w; ++x) {
            for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = rgb.at(y, x, ch);
            out.at(y, x, 3) = alpha.at(y, x, 0);
        }
    return out;
}

namespace {

AugmentedPair apply_augment(const AugmentationRecord& rec, const Image& p, const Image& p_prime,
                            const Image& subject_alpha, const Mask& m) {
    const Image bg = gen_background(rec.bg, p.h, p.w);
    const Image fg = rec.has_foreground ? render_foreground(rec.fg, p.h, p.w)
                                        : transparent_canvas(p.h, p.w);
    AugmentedPair out;
    out.p_aug = composite({bg, make_rgba(p, subject_alpha), fg});
    out.p_prime_aug = composite({bg, make_rgba(p_prime, subject_alpha), fg});
    out.m_aug = update_mask(m, fg);
    out.record = rec;
    return out;
}

}  // namespace

AugmentedPair augment_pair(const Image& p, const Image& p_prime, const Image& subject_alpha,
                           const Mask& m, Rng& rng, const AugmentConfig& cfg) {
    require(p.same_shape(p_prime), "augment_pair: pair resolution mismatch");
    require(p.h == m.h && p.w == m.w, "augment_pair: mask resolution mismatch");

    AugmentationRecord rec;
    rec.seed = rng.next();  // one draw from the caller's stream; the rest is local
    Rng local(rec.seed);
    rec.bg = BackgroundSpec::random(local);
    rec.has_foreground = local.uniform() < cfg.foreground_prob && cfg.fg.rho_max > 0.0;
    if (rec.has_foreground) {
        Foreground fg = gen_foreground(local, cfg.fg, m);
        rec.fg = fg.params;
        rec.occlusion = fg.occlusion;
        rec.has_foreground = fg.params.shape >= 0;
    }
    return apply_augment(rec, p, p_prime, subject_alpha, m);
}

AugmentedPair replay_augment(const AugmentationRecord& rec, const Image& p, const Image& p_prime,
                             const Image& subject_alpha, const Mask& m) {
    return apply_augment(rec, p, p_prime, subject_alpha, m);
}

}  // namespace tryon
