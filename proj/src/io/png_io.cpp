#include "fuseforge/io/png_io.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include <png.h>

#include "fuseforge/core/errors.hpp"

namespace fuseforge {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

void open_read(PngReader& r, std::FILE* f, const std::string& path) {
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!r.png) throw IoError("png read init failed: " + path);
    r.info = png_create_info_struct(r.png);
    if (!r.info) throw IoError("png info init failed: " + path);
    if (setjmp(png_jmpbuf(r.png))) throw IoError("png decode failed: " + path);
    png_init_io(r.png, f);
    png_read_info(r.png, r.info);
}

}  // namespace

DepthImage read_depth_png(const std::string& path, double depth_scale) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw IoError("cannot open " + path);
    PngReader r;
    open_read(r, f.get(), path);

    const png_uint_32 width = png_get_image_width(r.png, r.info);
    const png_uint_32 height = png_get_image_height(r.png, r.info);
    const int depth = png_get_bit_depth(r.png, r.info);
    const int color = png_get_color_type(r.png, r.info);
    if (depth != 16 || color != PNG_COLOR_TYPE_GRAY) {
        throw IoError("expected 16-bit grayscale png: " + path);
    }

    std::vector<uint16_t> row(width);
    DepthImage out(int(width), int(height), 0.0f);
    if (setjmp(png_jmpbuf(r.png))) throw IoError("png decode failed: " + path);
    for (png_uint_32 y = 0; y < height; ++y) {
        png_read_row(r.png, reinterpret_cast<png_bytep>(row.data()), nullptr);
        for (png_uint_32 x = 0; x < width; ++x) {
            // PNG stores 16-bit samples big-endian.
            const uint16_t be = row[x];
            const uint16_t v = uint16_t((be >> 8) | (be << 8));
            out.at(int(x), int(y)) = v == 0 ? 0.0f : float(double(v) / depth_scale);
        }
    }
    return out;
}

void write_depth_png(const std::string& path, const DepthImage& depth, double depth_scale) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw IoError("cannot open " + path + " for writing");
    PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!w.png) throw IoError("png write init failed: " + path);
    w.info = png_create_info_struct(w.png);
    if (!w.info) throw IoError("png info init failed: " + path);
    if (setjmp(png_jmpbuf(w.png))) throw IoError("png encode failed: " + path);

    png_init_io(w.png, f.get());
    png_set_IHDR(w.png, w.info, png_uint_32(depth.width()), png_uint_32(depth.height()), 16,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);

    std::vector<uint16_t> row(size_t(depth.width()));
    for (int y = 0; y < depth.height(); ++y) {
        for (int x = 0; x < depth.width(); ++x) {
            const double meters = double(depth.at(x, y));
            const long raw = meters <= 0.0 ? 0 : std::lround(meters * depth_scale);
            const uint16_t v = uint16_t(std::min(raw, 65535L));
            row[size_t(x)] = uint16_t((v >> 8) | (v << 8));
        }
        png_write_row(w.png, reinterpret_cast<png_bytep>(row.data()));
    }
    png_write_end(w.png, nullptr);
}

ColorImage read_color_png(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw IoError("cannot open " + path);
    PngReader r;
    open_read(r, f.get(), path);

    png_set_strip_16(r.png);
    png_set_palette_to_rgb(r.png);
    png_set_expand_gray_1_2_4_to_8(r.png);
    png_set_gray_to_rgb(r.png);
    png_set_strip_alpha(r.png);
    png_read_update_info(r.png, r.info);

    const png_uint_32 width = png_get_image_width(r.png, r.info);
    const png_uint_32 height = png_get_image_height(r.png, r.info);
    if (png_get_channels(r.png, r.info) != 3) {
        throw IoError("could not normalize png to rgb: " + path);
    }

    ColorImage out{int(width), int(height)};
    std::vector<uint8_t> row(size_t(width) * 3);
    if (setjmp(png_jmpbuf(r.png))) throw IoError("png decode failed: " + path);
    for (png_uint_32 y = 0; y < height; ++y) {
        png_read_row(r.png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < width; ++x) {
            out.at(int(x), int(y)) = {row[3 * x], row[3 * x + 1], row[3 * x + 2]};
        }
    }
    return out;
}

void write_color_png(const std::string& path, const ColorImage& color) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw IoError("cannot open " + path + " for writing");
    PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!w.png) throw IoError("png write init failed: " + path);
    w.info = png_create_info_struct(w.png);
    if (!w.info) throw IoError("png info init failed: " + path);
    if (setjmp(png_jmpbuf(w.png))) throw IoError("png encode failed: " + path);

    png_init_io(w.png, f.get());
    png_set_IHDR(w.png, w.info, png_uint_32(color.width()), png_uint_32(color.height()), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);

    std::vector<uint8_t> row(size_t(color.width()) * 3);
    for (int y = 0; y < color.height(); ++y) {
        for (int x = 0; x < color.width(); ++x) {
            const Rgb8& c = color.at(x, y);
            row[size_t(3 * x)] = c.r;
            row[size_t(3 * x) + 1] = c.g;
            row[size_t(3 * x) + 2] = c.b;
        }
        png_write_row(w.png, row.data());
    }
    png_write_end(w.png, nullptr);
}

}  // namespace fuseforge
