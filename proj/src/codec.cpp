#include "tryon/codec.hpp"

#include "tryon/common.hpp"

namespace tryon {

Codec Codec::from_name(const std::string& name) {
    if (name == "identity") return Codec{Kind::identity};
    if (name == "pool2") return Codec{Kind::pool2};
    throw ContractError("unknown codec: " + name);
}

int Codec::latent_dim(int image_dim) const {
    if (kind == Kind::identity) return image_dim;
    require(image_dim % 2 == 0, "pool2 codec needs even image dimensions");
    return image_dim / 2;
}

Latent encode(const Codec& codec, const Image& img) {
    require(img.c == 3, "encode: expected an RGB image");
    if (codec.kind == Codec::Kind::identity) return img;

    require(img.h % 2 == 0 && img.w % 2 == 0, "encode: pool2 needs even dimensions");
    Latent z(img.h / 2, img.w / 2, 3);
    for (int y = 0; y < z.h; ++y)
        for (int x = 0; x < z.w; ++x)
            for (int ch = 0; ch < 3; ++ch) {
                const double s = img.at(2 * y, 2 * x, ch) + img.at(2 * y, 2 * x + 1, ch) +
                                 img.at(2 * y + 1, 2 * x, ch) + img.at(2 * y + 1, 2 * x + 1, ch);
                z.at(y, x, ch) = s * 0.25;
            }
    return z;
}

Image decode(const Codec& codec, const Latent& z) {
    require(z.c == 3, "decode: latent must have 3 channels");
    if (codec.kind == Codec::Kind::identity) {
        Image img = z;
        return img.clip01();
    }
    Image img(z.h * 2, z.w * 2, 3);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = z.at(y / 2, x / 2, ch);
    return img.clip01();
}

}  // namespace tryon
