#include "polarcod/raster.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

#include "polarcod/error.hpp"

namespace polarcod {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

struct RawImage {
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<png_byte> bytes;
    std::vector<png_bytep> rows;
};

void on_png_warning(png_structp, png_const_charp) {}

// No C++ objects with destructors may be created between setjmp and the
// libpng calls below; everything lives in `img` and `message`.
bool decode(std::FILE* fp, RawImage& img, char* message) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, on_png_warning);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        std::snprintf(message, 128, "corrupt or truncated PNG");
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    img.width = png_get_image_width(png, info);
    img.height = png_get_image_height(png, info);
    img.channels = png_get_channels(png, info);
    img.bit_depth = png_get_bit_depth(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    img.bytes.resize(stride * img.height);
    img.rows.resize(img.height);
    for (png_uint_32 y = 0; y < img.height; ++y) img.rows[y] = img.bytes.data() + y * stride;
    png_read_image(png, img.rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

bool encode(std::FILE* fp, const RawImage& img, char* message) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, on_png_warning);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        std::snprintf(message, 128, "PNG encoder failed");
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, img.width, img.height, img.bit_depth,
                 img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, const_cast<png_bytepp>(img.rows.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

}  // namespace

void write_png(const std::filesystem::path& path, const std::vector<const Plane*>& channels, int bit_depth) {
    if (channels.size() != 1 && channels.size() != 3) throw DimensionError("write_png: need 1 or 3 channels");
    if (bit_depth != 8 && bit_depth != 16) throw DimensionError("write_png: bit depth must be 8 or 16");
    const Plane& first = *channels[0];
    for (const Plane* p : channels)
        if (!p->same_shape(first)) throw DimensionError("write_png: channels differ in size");
    if (first.size() == 0) throw DimensionError("write_png: empty image");

    RawImage img;
    img.width = static_cast<png_uint_32>(first.width);
    img.height = static_cast<png_uint_32>(first.height);
    img.channels = static_cast<int>(channels.size());
    img.bit_depth = bit_depth;
    const int bytes_per = bit_depth / 8;
    const double top = bit_depth == 16 ? 65535.0 : 255.0;
    const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels * bytes_per;
    img.bytes.resize(stride * img.height);
    img.rows.resize(img.height);
    for (png_uint_32 y = 0; y < img.height; ++y) {
        img.rows[y] = img.bytes.data() + y * stride;
        for (png_uint_32 x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                const double v = std::clamp(channels[c]->at(static_cast<int>(y), static_cast<int>(x)), 0.0, 1.0);
                const auto q = static_cast<unsigned>(std::lround(v * top));
                png_bytep dst = img.rows[y] + (static_cast<std::size_t>(x) * img.channels + c) * bytes_per;
                if (bytes_per == 2) {
                    dst[0] = static_cast<png_byte>(q >> 8);
                    dst[1] = static_cast<png_byte>(q & 0xff);
                } else {
                    dst[0] = static_cast<png_byte>(q);
                }
            }
    }
    File fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw DataError("cannot open " + path.string() + " for writing");
    char message[128] = "PNG encoder could not start";
    if (!encode(fp.get(), img, message)) throw DataError(path.string() + ": " + message);
}

std::vector<Plane> read_png(const std::filesystem::path& path) {
    File fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw DataError("cannot open " + path.string());
    png_byte sig[8] = {};
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw DataError(path.string() + ": not a PNG file");
    }
    std::rewind(fp.get());
    RawImage img;
    char message[128] = "PNG decoder could not start";
    if (!decode(fp.get(), img, message)) throw DataError(path.string() + ": " + message);
    if (img.channels != 1 && img.channels != 3) {
        throw DataError(path.string() + ": unsupported channel count " + std::to_string(img.channels));
    }
    const int h = static_cast<int>(img.height);
    const int w = static_cast<int>(img.width);
    const int bytes_per = img.bit_depth == 16 ? 2 : 1;
    const double top = img.bit_depth == 16 ? 65535.0 : 255.0;
    std::vector<Plane> out(img.channels, Plane(h, w));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < img.channels; ++c) {
                const png_bytep src = img.rows[y] + (static_cast<std::size_t>(x) * img.channels + c) * bytes_per;
                const unsigned q = bytes_per == 2 ? (static_cast<unsigned>(src[0]) << 8) | src[1] : src[0];
                out[c].at(y, x) = q / top;
            }
    return out;
}

}  // namespace polarcod
