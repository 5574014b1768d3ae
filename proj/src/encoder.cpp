#include "polarcod/encoder.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "polarcod/error.hpp"
#include "polarcod/model_config.hpp"

namespace polarcod {

namespace {

constexpr char kMagic[4] = {'P', 'C', 'F', 'T'};

static_assert(std::endian::native == std::endian::little, "feature files assume a little-endian host");

void put_u16(unsigned char* p, std::uint16_t v) {
    p[0] = static_cast<unsigned char>(v & 0xff);
    p[1] = static_cast<unsigned char>(v >> 8);
}

std::uint16_t get_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

}  // namespace

Encoder::Encoder(const std::array<int, 4>& channels, Rng& rng) : channels_(channels) {
    down_[0] = nn::ConvBn(3, channels[0], 4, rng, true, ops::Conv2dOptions{4, 0, 1});
    for (int i = 1; i < 4; ++i) {
        down_[i] = nn::ConvBn(channels[i - 1], channels[i], 3, rng, true, ops::Conv2dOptions{2, 1, 1});
    }
    for (int i = 0; i < 4; ++i) refine_[i] = nn::ConvBn(channels[i], channels[i], 3, rng);
}

std::array<Shape, 4> Encoder::stage_shapes(int n, int h, int w) const {
    std::array<Shape, 4> out;
    for (int i = 0; i < 4; ++i) out[i] = Shape{n, channels_[i], h >> (i + 2), w >> (i + 2)};
    return out;
}

FeaturePyramid Encoder::forward(const Tensor& rgb, bool training) {
    const Shape& s = rgb.shape();
    if (s.c != 3) throw DimensionError("encoder: expected 3 input channels, got " + s.str());
    if (s.h % kStride != 0 || s.w % kStride != 0) {
        const int ph = (kStride - s.h % kStride) % kStride;
        const int pw = (kStride - s.w % kStride) % kStride;
        throw DimensionError("encoder: input " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                             " is not divisible by 32; pad by " + std::to_string(ph) + " rows and " +
                             std::to_string(pw) + " columns");
    }
    const auto shapes = stage_shapes(s.n, s.h, s.w);
    if (injected_) {
        for (int i = 0; i < 4; ++i) {
            if (!((*injected_)[i].shape() == shapes[i])) {
                throw DimensionError("encoder: injected stage " + std::to_string(i + 1) + " has shape " +
                                     (*injected_)[i].shape().str() + ", expected " + shapes[i].str());
            }
        }
        return *injected_;
    }
    FeaturePyramid f;
    Tensor x = rgb;
    for (int i = 0; i < 4; ++i) {
        x = refine_[i].forward(down_[i].forward(x, training), training);
        f[i] = x;
    }
    return f;
}

void Encoder::collect(nn::ParamRegistry& reg) {
    for (int i = 0; i < 4; ++i) {
        const std::string p = "encoder.stage" + std::to_string(i + 1);
        down_[i].collect(reg, p + ".down", group::encoder);
        refine_[i].collect(reg, p + ".refine", group::encoder);
    }
}

void write_feature_file(const std::filesystem::path& path, const Tensor& t, FeatureDtype dtype) {
    const Shape& s = t.shape();
    for (int d : {s.n, s.c, s.h, s.w}) {
        if (d > std::numeric_limits<std::uint16_t>::max()) {
            throw DimensionError("feature file: dimension " + std::to_string(d) + " exceeds 65535");
        }
    }
    unsigned char header[16] = {};
    std::memcpy(header, kMagic, 4);
    put_u16(header + 4, static_cast<std::uint16_t>(dtype));
    put_u16(header + 6, static_cast<std::uint16_t>(s.n));
    put_u16(header + 8, static_cast<std::uint16_t>(s.c));
    put_u16(header + 10, static_cast<std::uint16_t>(s.h));
    put_u16(header + 12, static_cast<std::uint16_t>(s.w));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(header), sizeof header);
    const auto v = t.data();
    if (dtype == FeatureDtype::f64) {
        out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    } else {
        std::vector<float> f(v.begin(), v.end());
        out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
    }
    if (!out) throw DataError("short write to " + path.string());
}

Tensor read_feature_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    unsigned char header[16];
    if (!in.read(reinterpret_cast<char*>(header), sizeof header)) {
        throw DataError(path.string() + ": truncated header");
    }
    if (std::memcmp(header, kMagic, 4) != 0) throw DataError(path.string() + ": bad magic");
    const auto dtype = static_cast<FeatureDtype>(get_u16(header + 4));
    if (dtype != FeatureDtype::f32 && dtype != FeatureDtype::f64) {
        throw DataError(path.string() + ": unknown dtype code " + std::to_string(get_u16(header + 4)));
    }
    const Shape s{get_u16(header + 6), get_u16(header + 8), get_u16(header + 10), get_u16(header + 12)};
    if (s.numel() == 0) throw DataError(path.string() + ": empty tensor " + s.str());
    std::vector<double> values(s.numel());
    if (dtype == FeatureDtype::f64) {
        in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    } else {
        std::vector<float> f(s.numel());
        in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
        values.assign(f.begin(), f.end());
    }
    if (!in) throw DataError(path.string() + ": payload shorter than " + s.str());
    in.peek();
    if (!in.eof()) throw DataError(path.string() + ": trailing bytes after payload");
    return Tensor::from(s, std::move(values));
}

FeaturePyramid read_feature_pyramid(const std::filesystem::path& dir, const std::string& stem) {
    FeaturePyramid f;
    for (int i = 0; i < 4; ++i) f[i] = read_feature_file(dir / (stem + "_stage" + std::to_string(i + 1) + ".pcft"));
    return f;
}

void write_feature_pyramid(const std::filesystem::path& dir, const std::string& stem, const FeaturePyramid& f,
                           FeatureDtype dtype) {
    for (int i = 0; i < 4; ++i) {
        write_feature_file(dir / (stem + "_stage" + std::to_string(i + 1) + ".pcft"), f[i], dtype);
    }
}

}  // namespace polarcod
