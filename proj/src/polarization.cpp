#include "polarcod/polarization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "polarcod/error.hpp"

namespace polarcod {

namespace {

constexpr double kEps = 1e-12;

void clamp01(Plane& p) {
    for (double& v : p.values) v = std::clamp(v, 0.0, 1.0);
}

}  // namespace

PolarCapture PolarCapture::ingest(Plane i0, Plane i45, Plane i90, Plane i135) {
    if (!i0.same_shape(i45) || !i0.same_shape(i90) || !i0.same_shape(i135)) {
        throw DimensionError("polarization capture planes differ in size");
    }
    clamp01(i0);
    clamp01(i45);
    clamp01(i90);
    clamp01(i135);
    return {std::move(i0), std::move(i45), std::move(i90), std::move(i135)};
}

StokesImage compute_stokes(const PolarCapture& cap) {
    if (!cap.i0.same_shape(cap.i45) || !cap.i0.same_shape(cap.i90) || !cap.i0.same_shape(cap.i135)) {
        throw DimensionError("compute_stokes: capture planes differ in size");
    }
    const int h = cap.height();
    const int w = cap.width();
    StokesImage st{Plane(h, w), Plane(h, w), Plane(h, w)};
    for (std::size_t i = 0; i < cap.i0.size(); ++i) {
        const double a = cap.i0.values[i];
        const double b = cap.i45.values[i];
        const double c = cap.i90.values[i];
        const double d = cap.i135.values[i];
        const double s0 = (a + c + b + d) / 4.0;
        double s1 = (a - c) / 2.0;
        double s2 = (b - d) / 2.0;
        // Radial clamp onto the physically valid cone s1^2 + s2^2 <= s0^2.
        const double r = std::sqrt(s1 * s1 + s2 * s2);
        if (r > s0) {
            const double k = r > 0 ? s0 / r : 0.0;
            s1 *= k;
            s2 *= k;
        }
        st.s0.values[i] = s0;
        st.s1.values[i] = s1;
        st.s2.values[i] = s2;
    }
    return st;
}

double angle_to_unit(double angle) { return angle / std::numbers::pi + 0.5; }
double unit_to_angle(double unit) { return (unit - 0.5) * std::numbers::pi; }

PolarizationCues compute_cues(const StokesImage& st, double dolp_floor) {
    const int h = st.s0.height;
    const int w = st.s0.width;
    PolarizationCues cues{Plane(h, w), Plane(h, w)};
    for (std::size_t i = 0; i < st.s0.size(); ++i) {
        const double s0 = st.s0.values[i];
        const double s1 = st.s1.values[i];
        const double s2 = st.s2.values[i];
        const double d = std::clamp(std::sqrt(s1 * s1 + s2 * s2) / std::max(s0, kEps), 0.0, 1.0);
        cues.rho_d.values[i] = d;
        if (d < dolp_floor) {
            cues.rho_a.values[i] = 0.5;
        } else {
            cues.rho_a.values[i] = std::clamp(angle_to_unit(0.5 * std::atan2(s2, s1)), 0.0, 1.0);
        }
    }
    return cues;
}

Plane sobel_magnitude(const Plane& p) {
    const int h = p.height;
    const int w = p.width;
    Plane out(h, w);
    auto px = [&](int y, int x) { return p.at(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1)); };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double gx = (px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1)) -
                              (px(y - 1, x - 1) + 2 * px(y, x - 1) + px(y + 1, x - 1));
            const double gy = (px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1)) -
                              (px(y - 1, x - 1) + 2 * px(y - 1, x) + px(y - 1, x + 1));
            out.at(y, x) = std::sqrt(gx * gx + gy * gy);
        }
    return out;
}

Plane normalized_sobel(const Plane& p) {
    Plane g = sobel_magnitude(p);
    double peak = 0.0;
    for (double v : g.values) peak = std::max(peak, v);
    const double inv = 1.0 / std::max(peak, kEps);
    for (double& v : g.values) v = std::clamp(v * inv, 0.0, 1.0);
    return g;
}

PolarizationCues surrogate_cues(const Tensor& rgb, const Plane* depth) {
    const Shape& s = rgb.shape();
    if (s.n != 1 || s.c != 3) throw DimensionError("surrogate_cues: expected (1, 3, H, W) rgb, got " + s.str());
    Plane lum(s.h, s.w);
    const auto v = rgb.data();
    const std::size_t plane = s.plane();
    for (std::size_t i = 0; i < plane; ++i) {
        lum.values[i] = 0.299 * v[i] + 0.587 * v[plane + i] + 0.114 * v[2 * plane + i];
    }
    PolarizationCues cues{normalized_sobel(lum), Plane(s.h, s.w, 0.5)};
    if (depth) {
        if (depth->height != s.h || depth->width != s.w) {
            throw DimensionError("surrogate_cues: depth plane size differs from rgb");
        }
        const auto [lo, hi] = std::minmax_element(depth->values.begin(), depth->values.end());
        if (*hi > *lo) {
            const double range = *hi - *lo;
            for (std::size_t i = 0; i < plane; ++i) cues.rho_a.values[i] = (depth->values[i] - *lo) / range;
        }
    }
    return cues;
}

PolarCapture render_capture(const Plane& s0, const Plane& dolp, const Plane& angle) {
    if (!s0.same_shape(dolp) || !s0.same_shape(angle)) {
        throw DimensionError("render_capture: planes differ in size");
    }
    const int h = s0.height;
    const int w = s0.width;
    PolarCapture cap{Plane(h, w), Plane(h, w), Plane(h, w), Plane(h, w)};
    for (std::size_t i = 0; i < s0.size(); ++i) {
        const double a = 2.0 * angle.values[i];
        const double s1 = dolp.values[i] * s0.values[i] * std::cos(a);
        const double s2 = dolp.values[i] * s0.values[i] * std::sin(a);
        // cos/sin of 2*theta for theta = 0, 45, 90, 135 degrees are exact.
        cap.i0.values[i] = (s0.values[i] + s1) / 2.0;
        cap.i45.values[i] = (s0.values[i] + s2) / 2.0;
        cap.i90.values[i] = (s0.values[i] - s1) / 2.0;
        cap.i135.values[i] = (s0.values[i] - s2) / 2.0;
    }
    return cap;
}

}  // namespace polarcod
