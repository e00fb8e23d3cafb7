#include "tryon/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace tryon {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

uint8_t quantize(double v) {
    double q = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
    return static_cast<uint8_t>(q);
}

void write_png_bytes(const std::string& path, const std::vector<uint8_t>& bytes, int h, int w,
                     int channels) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot open for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng write error: " + path);
    }
    png_init_io(png, fp.get());

    int color_type = PNG_COLOR_TYPE_GRAY;
    if (channels == 3) color_type = PNG_COLOR_TYPE_RGB;
    if (channels == 4) color_type = PNG_COLOR_TYPE_RGBA;
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_bytep> rows(static_cast<size_t>(h));
    for (int y = 0; y < h; ++y)
        rows[static_cast<size_t>(y)] =
            const_cast<png_bytep>(bytes.data() + static_cast<size_t>(y) * w * channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::vector<uint8_t> read_png_bytes(const std::string& path, int& h, int& w, int& channels) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("cannot open for reading: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("libpng read error (corrupt file?): " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    w = static_cast<int>(png_get_image_width(png, info));
    h = static_cast<int>(png_get_image_height(png, info));
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_read_update_info(png, info);

    channels = static_cast<int>(png_get_channels(png, info));
    std::vector<uint8_t> bytes(static_cast<size_t>(h) * w * channels);
    std::vector<png_bytep> rows(static_cast<size_t>(h));
    for (int y = 0; y < h; ++y)
        rows[static_cast<size_t>(y)] = bytes.data() + static_cast<size_t>(y) * w * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return bytes;
}

}  // namespace

void write_png(const std::string& path, const Image& img) {
    if (img.c != 1 && img.c != 3 && img.c != 4)
        throw std::runtime_error("write_png: unsupported channel count");
    std::vector<uint8_t> bytes(img.size());
    for (size_t i = 0; i < img.size(); ++i) bytes[i] = quantize(img.v[i]);
    write_png_bytes(path, bytes, img.h, img.w, img.c);
}

Image read_png(const std::string& path) {
    int h = 0, w = 0, c = 0;
    std::vector<uint8_t> bytes = read_png_bytes(path, h, w, c);
    Image img(h, w, c);
    for (size_t i = 0; i < img.size(); ++i) img.v[i] = bytes[i] / 255.0;
    return img;
}

void write_mask_png(const std::string& path, const Mask& m) {
    std::vector<uint8_t> bytes(m.size());
    for (size_t i = 0; i < m.size(); ++i) bytes[i] = m.v[i] ? 255 : 0;
    write_png_bytes(path, bytes, m.h, m.w, 1);
}

Mask read_mask_png(const std::string& path) {
    int h = 0, w = 0, c = 0;
    std::vector<uint8_t> bytes = read_png_bytes(path, h, w, c);
    if (c != 1) throw std::runtime_error("mask PNG must be grayscale: " + path);
    Mask m(h, w);
    for (size_t i = 0; i < m.size(); ++i) {
        if (bytes[i] != 0 && bytes[i] != 255)
            throw std::runtime_error("mask PNG must be binary {0,255}: " + path);
        m.v[i] = bytes[i] ? 1 : 0;
    }
    return m;
}

}  // namespace tryon
