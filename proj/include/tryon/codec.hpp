#pragma once

#include <string>

#include "tryon/tensor.hpp"

namespace tryon {

// Autoencoder pair (encode, decode) between pixel and latent space.
// "identity" is pixel-space diffusion; "pool2" is 2x2 area-mean pooling with
// nearest-neighbor decode. Both are deterministic and swappable behind this
// interface.
struct Codec {
    enum class Kind { identity, pool2 };
    Kind kind = Kind::identity;

    static Codec from_name(const std::string& name);
    std::string name() const { return kind == Kind::identity ? "identity" : "pool2"; }

    // Latent spatial size for a given image size.
    int latent_dim(int image_dim) const;
};

Latent encode(const Codec& codec, const Image& img);
Image decode(const Codec& codec, const Latent& z);

}  // namespace tryon
