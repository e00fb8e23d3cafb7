#include <doctest.h>

#include "tryon/codec.hpp"
#include "tryon/common.hpp"
#include "tryon/rng.hpp"

using namespace tryon;

TEST_CASE("identity codec: encode is bitwise identity, decode inverts") {
    const Codec c = Codec::from_name("identity");
    Image img(4, 4, 3);
    Rng rng(8);
    for (double& v : img.v) v = rng.uniform();
    const Latent z = encode(c, img);
    CHECK(z == img);
    CHECK(decode(c, z) == img);
}

TEST_CASE("pooling codec: area means") {
    const Codec c = Codec::from_name("pool2");
    SUBCASE("constant block") {
        Image img(2, 2, 3, 0.6);
        const Latent z = encode(c, img);
        CHECK(z.h == 1);
        CHECK(z.w == 1);
        for (int ch = 0; ch < 3; ++ch) CHECK(z.at(0, 0, ch) == doctest::Approx(0.6));
    }
    SUBCASE("hand mean of checkerboard block") {
        Image img(2, 2, 3, 0.0);
        for (int ch = 0; ch < 3; ++ch) {
            img.at(0, 1, ch) = 1.0;
            img.at(1, 0, ch) = 1.0;
        }
        const Latent z = encode(c, img);
        for (int ch = 0; ch < 3; ++ch) CHECK(z.at(0, 0, ch) == doctest::Approx(0.5));
    }
    SUBCASE("round trip is exact on block-constant images") {
        Image img(4, 4, 3);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x)
                for (int ch = 0; ch < 3; ++ch)
                    img.at(y, x, ch) = 0.1 + 0.2 * ((y / 2) * 2 + (x / 2));
        CHECK(decode(c, encode(c, img)) == img);
    }
}

TEST_CASE("decode clips to [0, 1]") {
    Latent z(1, 1, 3);
    z.v = {1.3, -0.2, 0.5};
    const Image img = decode(Codec::from_name("identity"), z);
    CHECK(img.v[0] == 1.0);
    CHECK(img.v[1] == 0.0);
    CHECK(img.v[2] == 0.5);
}

TEST_CASE("encode rejects wrong channel count") {
    Image rgba(2, 2, 4, 0.5);
    CHECK_THROWS_AS(encode(Codec::from_name("identity"), rgba), ContractError);
}

TEST_CASE("encode is 1-Lipschitz under max-norm") {
    const Codec pool = Codec::from_name("pool2");
    Rng rng(3);
    Image a(4, 4, 3), b(4, 4, 3);
    for (size_t i = 0; i < a.size(); ++i) {
        a.v[i] = rng.uniform();
        b.v[i] = rng.uniform();
    }
    double in_max = 0.0;
    for (size_t i = 0; i < a.size(); ++i) in_max = std::max(in_max, std::abs(a.v[i] - b.v[i]));
    const Latent za = encode(pool, a), zb = encode(pool, b);
    double out_max = 0.0;
    for (size_t i = 0; i < za.size(); ++i)
        out_max = std::max(out_max, std::abs(za.v[i] - zb.v[i]));
    CHECK(out_max <= in_max + 1e-15);
}
