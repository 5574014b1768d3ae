#include "polarcod/fft.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "polarcod/error.hpp"
#include "polarcod/ops.hpp"

namespace polarcod {

namespace fft {

namespace {

bool is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

// Twiddles e^{-2*pi*i*k/n}, cached per thread.
const std::vector<std::complex<double>>& twiddles(std::size_t n) {
    thread_local std::map<std::size_t, std::vector<std::complex<double>>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<std::complex<double>> t(n);
    for (std::size_t k = 0; k < n; ++k) {
        double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        t[k] = {std::cos(a), std::sin(a)};
    }
    return cache.emplace(n, std::move(t)).first->second;
}

void radix2(std::span<std::complex<double>> a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const auto& tw = twiddles(n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t step = n / len;
        const std::size_t half = len / 2;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                std::complex<double> w = tw[k * step];
                if (inverse) w = std::conj(w);
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + half] * w;
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
}

void direct(std::span<std::complex<double>> a, bool inverse) {
    const std::size_t n = a.size();
    const auto& tw = twiddles(n);
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            std::complex<double> w = tw[(k * j) % n];
            acc += a[j] * (inverse ? std::conj(w) : w);
        }
        out[k] = acc;
    }
    std::copy(out.begin(), out.end(), a.begin());
}

}  // namespace

void transform1d(std::span<std::complex<double>> data, bool inverse) {
    if (data.size() <= 1) return;
    if (is_pow2(data.size())) {
        radix2(data, inverse);
    } else {
        direct(data, inverse);
    }
}

void transform2d(std::span<std::complex<double>> plane, int h, int w, bool inverse) {
    if (plane.size() != static_cast<std::size_t>(h) * static_cast<std::size_t>(w)) {
        throw DimensionError("transform2d: plane size mismatch");
    }
    for (int y = 0; y < h; ++y) transform1d(plane.subspan(static_cast<std::size_t>(y) * w, w), inverse);
    std::vector<std::complex<double>> col(h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) col[y] = plane[static_cast<std::size_t>(y) * w + x];
        transform1d(col, inverse);
        for (int y = 0; y < h; ++y) plane[static_cast<std::size_t>(y) * w + x] = col[y];
    }
}

}  // namespace fft

namespace {

Spectrum transform(const Tensor& re, const Tensor& im, bool inverse) {
    Tensor packed = im.defined() ? ops::concat({re, im}) : ops::concat({re, Tensor::zeros(re.shape())});
    Tensor out = ops::dft2_packed(packed, inverse);
    auto [r, i] = ops::chunk2(out);
    return {r, i};
}

}  // namespace

Spectrum fft2(const Tensor& x) { return transform(x, Tensor{}, false); }

Spectrum fft2(const Spectrum& s) { return transform(s.real, s.imag, false); }

Spectrum ifft2_complex(const Spectrum& s) { return transform(s.real, s.imag, true); }

Tensor ifft2(const Spectrum& s) { return ifft2_complex(s).real; }

std::pair<Tensor, Tensor> amp_phase(const Spectrum& s, double eps) {
    return {ops::magnitude(s.real, s.imag, eps), ops::phase(s.real, s.imag, eps)};
}

Spectrum polar_recombine(const Tensor& amplitude, const Tensor& phase) {
    if (amplitude.shape() != phase.shape()) {
        throw DimensionError("polar_recombine: amplitude " + amplitude.shape().str() + " vs phase " +
                             phase.shape().str());
    }
    return {ops::mul(amplitude, ops::cos(phase)), ops::mul(amplitude, ops::sin(phase))};
}

Tensor hermitian_symmetrize(const Tensor& x) {
    const Shape s = x.shape();
    const std::size_t plane = s.plane();
    // Index of the frequency bin (-u mod H, -v mod W) for every bin.
    std::vector<std::size_t> mirror(plane);
    for (int u = 0; u < s.h; ++u)
        for (int v = 0; v < s.w; ++v)
            mirror[static_cast<std::size_t>(u) * s.w + v] =
                static_cast<std::size_t>((s.h - u) % s.h) * s.w + static_cast<std::size_t>((s.w - v) % s.w);
    auto xv = x.data();
    std::vector<double> out(xv.size());
    for (std::size_t p = 0; p < xv.size(); p += plane)
        for (std::size_t k = 0; k < plane; ++k) out[p + k] = 0.5 * (xv[p + k] + xv[p + mirror[k]]);
    return Tensor::make_result(s, std::move(out), {x}, [plane, mirror = std::move(mirror)](detail::Node& self) {
        double* g = self.input_grad(0);
        if (!g) return;
        for (std::size_t p = 0; p < self.grad.size(); p += plane)
            for (std::size_t k = 0; k < plane; ++k) {
                const double v = 0.5 * self.grad[p + k];
                g[p + k] += v;
                g[p + mirror[k]] += v;
            }
    });
}

}  // namespace polarcod
