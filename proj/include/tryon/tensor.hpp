#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tryon/common.hpp"

namespace tryon {

// Dense H x W x C array of doubles, row-major with the channel fastest.
// Images keep values in [0, 1]; latents are any finite reals.
struct Tensor {
    int h = 0, w = 0, c = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int h_, int w_, int c_, double fill = 0.0)
        : h(h_), w(w_), c(c_), v(static_cast<size_t>(h_) * w_ * c_, fill) {}

    double& at(int y, int x, int ch) { return v[(static_cast<size_t>(y) * w + x) * c + ch]; }
    double at(int y, int x, int ch) const { return v[(static_cast<size_t>(y) * w + x) * c + ch]; }

    size_t size() const { return v.size(); }
    bool same_shape(const Tensor& o) const { return h == o.h && w == o.w && c == o.c; }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }

    Tensor& clip01() {
        for (double& x : v) x = std::clamp(x, 0.0, 1.0);
        return *this;
    }

    bool operator==(const Tensor& o) const {
        return h == o.h && w == o.w && c == o.c && v == o.v;
    }
};

using Image = Tensor;   // pixel space, values in [0, 1], c in {1, 3, 4}
using Latent = Tensor;  // latent space

// Binary try-on mask: 1 = try-on area, 0 = non-try-on area.
struct Mask {
    int h = 0, w = 0;
    std::vector<uint8_t> v;

    Mask() = default;
    Mask(int h_, int w_, uint8_t fill = 0)
        : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill) {}

    uint8_t& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
    uint8_t at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }

    size_t size() const { return v.size(); }
    size_t count() const {
        size_t n = 0;
        for (uint8_t b : v) n += b;
        return n;
    }

    bool operator==(const Mask& o) const { return h == o.h && w == o.w && v == o.v; }
};

inline uint64_t content_hash(const Tensor& t) {
    uint64_t hsh = fnv1a64(&t.h, sizeof t.h);
    hsh = fnv1a64(&t.w, sizeof t.w, hsh);
    hsh = fnv1a64(&t.c, sizeof t.c, hsh);
    return fnv1a64(t.v.data(), t.v.size() * sizeof(double), hsh);
}

inline uint64_t content_hash(const Mask& m) {
    uint64_t hsh = fnv1a64(&m.h, sizeof m.h);
    hsh = fnv1a64(&m.w, sizeof m.w, hsh);
    return fnv1a64(m.v.data(), m.v.size(), hsh);
}

}  // namespace tryon
