// SPDX-License-Identifier: Apache-2.0
#include "splatflow/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <vector>

#include "splatflow/errors.hpp"

namespace splatflow {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) {
            std::fclose(f);
        }
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t to_byte(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

void write_png_impl(const std::filesystem::path& path, int width, int height, int channels,
                    const std::vector<std::uint8_t>& bytes) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) {
        throw SinkError("cannot open png for writing: " + path.string());
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) {
        throw SinkError("png encoder allocation failed");
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw SinkError("png encoder allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw SinkError("png encode failed: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_compression_level(png, 1);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    const std::size_t stride = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
    for (int y = 0; y < height; ++y) {
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(bytes.data() + static_cast<std::size_t>(y) * stride);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::vector<std::uint8_t> read_png_impl(const std::filesystem::path& path, int channels, int& width,
                                        int& height) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) {
        throw FileUnreadable("cannot open png: " + path.string());
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) {
        throw BadMagic("png decoder allocation failed");
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw BadMagic("png decoder allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw BadMagic("png decode failed: " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_packing(png);
    png_set_expand(png);
    png_set_strip_alpha(png);
    if (channels == 3) {
        png_set_gray_to_rgb(png);
    } else {
        const png_byte color = png_get_color_type(png, info);
        if (color != PNG_COLOR_TYPE_GRAY) {
            png_destroy_read_struct(&png, &info, nullptr);
            throw BadMagic("expected single-channel png: " + path.string());
        }
    }
    png_read_update_info(png, info);

    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    const std::size_t stride = png_get_rowbytes(png, info);
    if (stride != static_cast<std::size_t>(width) * static_cast<std::size_t>(channels)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw BadMagic("unexpected png layout: " + path.string());
    }
    std::vector<std::uint8_t> bytes(stride * static_cast<std::size_t>(height));
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
        rows[static_cast<std::size_t>(y)] = bytes.data() + static_cast<std::size_t>(y) * stride;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return bytes;
}

} // namespace

void write_png_rgb8(const Grid<Eigen::Vector3d>& image, const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(image.size() * 3);
    for (const Eigen::Vector3d& px : image.data()) {
        bytes.push_back(to_byte(px.x()));
        bytes.push_back(to_byte(px.y()));
        bytes.push_back(to_byte(px.z()));
    }
    write_png_impl(path, image.width(), image.height(), 3, bytes);
}

Grid<Eigen::Vector3d> read_png_rgb(const std::filesystem::path& path) {
    int w = 0;
    int h = 0;
    const std::vector<std::uint8_t> bytes = read_png_impl(path, 3, w, h);
    Grid<Eigen::Vector3d> out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                                   static_cast<std::size_t>(x)) * 3;
            out(x, y) = Eigen::Vector3d(bytes[i] / 255.0, bytes[i + 1] / 255.0, bytes[i + 2] / 255.0);
        }
    }
    return out;
}

void write_png_gray8(const Grid<std::uint8_t>& image, const std::filesystem::path& path) {
    write_png_impl(path, image.width(), image.height(), 1, image.data());
}

Grid<std::uint8_t> read_png_gray8(const std::filesystem::path& path) {
    int w = 0;
    int h = 0;
    const std::vector<std::uint8_t> bytes = read_png_impl(path, 1, w, h);
    Grid<std::uint8_t> out(w, h);
    out.data() = bytes;
    return out;
}

Grid<std::uint8_t> mask_to_bytes(const ValidMask& mask) {
    Grid<std::uint8_t> out(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        out.data()[i] = mask.data()[i] ? 255 : 0;
    }
    return out;
}

ValidMask bytes_to_mask(const Grid<std::uint8_t>& bytes) {
    ValidMask out(bytes.width(), bytes.height());
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        out.data()[i] = bytes.data()[i] >= 128 ? 1 : 0;
    }
    return out;
}

void write_mask_png(const ValidMask& mask, const std::filesystem::path& path) {
    write_png_gray8(mask_to_bytes(mask), path);
}

ValidMask read_mask_png(const std::filesystem::path& path) {
    return bytes_to_mask(read_png_gray8(path));
}

} // namespace splatflow
