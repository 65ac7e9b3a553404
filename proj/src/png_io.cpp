#include "tissuemix/png_io.hpp"

#include <png.h>

#include <array>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

namespace tissuemix::io {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::filesystem::path& path, const char* mode) {
    File f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError(std::string("cannot open ") + path.string() + ": " + std::strerror(errno));
    return f;
}

void write_simplified(const std::filesystem::path& path, int width, int height, png_uint_32 format,
                      const std::uint8_t* data) {
    require(width > 0 && height > 0, "cannot write an empty image to " + path.string());
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(width);
    img.height = static_cast<png_uint_32>(height);
    img.format = format;
    auto f = open_file(path, "wb");
    if (!png_image_write_to_stdio(&img, f.get(), 0, data, 0, nullptr)) {
        throw IoError("failed to encode " + path.string() + ": " + img.message);
    }
    if (std::fflush(f.get()) != 0) throw IoError("failed writing " + path.string());
}

extern "C" void on_png_error(png_structp png, png_const_charp msg) {
    auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
    *buf = msg;
    png_longjmp(png, 1);
}

extern "C" void on_png_warning(png_structp, png_const_charp) {}

}  // namespace

Image read_image(const std::filesystem::path& path) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    auto f = open_file(path, "rb");
    if (!png_image_begin_read_from_stdio(&img, f.get())) {
        throw IoError("cannot decode " + path.string() + ": " + img.message);
    }
    img.format = PNG_FORMAT_RGB;
    if (img.width == 0 || img.height == 0) {
        png_image_free(&img);
        throw IoError(path.string() + " has a zero dimension");
    }
    Image out(static_cast<int>(img.height), static_cast<int>(img.width));
    if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
        throw IoError("cannot decode " + path.string() + ": " + img.message);
    }
    return out;
}

void write_image(const std::filesystem::path& path, const Image& image) {
    validate(image);
    write_simplified(path, image.width, image.height, PNG_FORMAT_RGB, image.pixels.data());
}

LabelMask read_mask(const std::filesystem::path& path, int num_classes, std::uint8_t background) {
    auto f = open_file(path, "rb");
    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
    if (!png) throw IoError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng initialisation failed");
    }

    LabelMask out;
    std::string problem;
    // Nothing with a non-trivial destructor is created between setjmp and the
    // last libpng call below, so longjmp cannot skip a destructor.
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("cannot decode mask " + path.string() + ": " + err);
    }
    png_init_io(png, f.get());
    png_read_info(png, info);
    const auto width = png_get_image_width(png, info);
    const auto height = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_PALETTE) {
        problem = "must be a single-channel grayscale or palette PNG";
    } else if (depth > 8) {
        problem = "has more than 8 bits per sample";
    } else if (width == 0 || height == 0) {
        problem = "has a zero dimension";
    }
    if (problem.empty()) {
        if (depth < 8) png_set_packing(png);  // palette indices / gray values stay unscaled
        png_read_update_info(png, info);
        out = LabelMask(static_cast<int>(height), static_cast<int>(width), 0, background);
        rows.resize(height);
        for (png_uint_32 r = 0; r < height; ++r) rows[r] = out.labels.data() + static_cast<std::size_t>(r) * width;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    if (!problem.empty()) throw IoError("mask " + path.string() + " " + problem);

    if (num_classes > 0) {
        try {
            validate(out, num_classes);
        } catch (const InvalidArgument& e) {
            fail(path.string() + ": " + e.what());
        }
    }
    return out;
}

void write_mask(const std::filesystem::path& path, const LabelMask& mask) {
    validate(mask);
    write_simplified(path, mask.width, mask.height, PNG_FORMAT_GRAY, mask.labels.data());
}

void write_mask_preview(const std::filesystem::path& path, const LabelMask& mask) {
    validate(mask);
    static constexpr std::array<std::array<std::uint8_t, 3>, 8> palette{{
        {205, 51, 51}, {0, 128, 0}, {65, 105, 225}, {255, 165, 0},
        {128, 0, 128}, {0, 139, 139}, {139, 69, 19}, {255, 20, 147},
    }};
    Image img(mask.height, mask.width);
    for (std::size_t i = 0; i < mask.labels.size(); ++i) {
        const auto l = mask.labels[i];
        const auto& c = l == mask.background ? std::array<std::uint8_t, 3>{255, 255, 255} : palette[l % palette.size()];
        std::memcpy(&img.pixels[i * 3], c.data(), 3);
    }
    write_image(path, img);
}

}  // namespace tissuemix::io
