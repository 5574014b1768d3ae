#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "polarcod/error.hpp"
#include "polarcod/polarization.hpp"

using namespace polarcod;

namespace {

PolarCapture pixel(double a, double b, double c, double d) {
    return PolarCapture::ingest(Plane(1, 1, a), Plane(1, 1, b), Plane(1, 1, c), Plane(1, 1, d));
}

StokesImage stokes_pixel(double s0, double s1, double s2) {
    return {Plane(1, 1, s0), Plane(1, 1, s1), Plane(1, 1, s2)};
}

}  // namespace

TEST(Stokes, HorizontalPolarization) {
    StokesImage st = compute_stokes(pixel(1, 0.5, 0, 0.5));
    EXPECT_NEAR(st.s0.values[0], 0.5, 1e-12);
    EXPECT_NEAR(st.s1.values[0], 0.5, 1e-12);
    EXPECT_NEAR(st.s2.values[0], 0.0, 1e-12);
}

TEST(Stokes, Unpolarized) {
    StokesImage st = compute_stokes(pixel(0.3, 0.3, 0.3, 0.3));
    EXPECT_NEAR(st.s0.values[0], 0.3, 1e-12);
    EXPECT_NEAR(st.s1.values[0], 0.0, 1e-12);
    EXPECT_NEAR(st.s2.values[0], 0.0, 1e-12);
}

TEST(Stokes, FortyFiveDegrees) {
    StokesImage st = compute_stokes(pixel(0.5, 1, 0.5, 0));
    EXPECT_NEAR(st.s0.values[0], 0.5, 1e-12);
    EXPECT_NEAR(st.s1.values[0], 0.0, 1e-12);
    EXPECT_NEAR(st.s2.values[0], 0.5, 1e-12);
}

TEST(Stokes, ShapeMismatchIsError) {
    EXPECT_THROW(PolarCapture::ingest(Plane(2, 2), Plane(2, 2), Plane(2, 3), Plane(2, 2)), DimensionError);
    PolarCapture cap{Plane(2, 2), Plane(2, 2), Plane(1, 2), Plane(2, 2)};
    EXPECT_THROW(compute_stokes(cap), DimensionError);
}

TEST(Stokes, IngestClampsToUnitRange) {
    PolarCapture cap = pixel(1.5, -0.2, 0.4, 0.4);
    EXPECT_EQ(cap.i0.values[0], 1.0);
    EXPECT_EQ(cap.i45.values[0], 0.0);
}

TEST(Stokes, PropertyValidConeAfterClamp) {
    Rng rng(21);
    Plane a(16, 16), b(16, 16), c(16, 16), d(16, 16);
    for (Plane* p : {&a, &b, &c, &d})
        for (double& v : p->values) v = rng.uniform(-0.1, 1.1);
    StokesImage st = compute_stokes(PolarCapture::ingest(a, b, c, d));
    for (std::size_t i = 0; i < st.s0.size(); ++i) {
        const double s0 = st.s0.values[i], s1 = st.s1.values[i], s2 = st.s2.values[i];
        EXPECT_GE(s0, 0.0);
        EXPECT_LE(s1 * s1 + s2 * s2, s0 * s0 + 1e-9);
    }
}

TEST(Cues, HorizontalPolarization) {
    PolarizationCues q = compute_cues(stokes_pixel(0.5, 0.5, 0));
    EXPECT_NEAR(q.rho_d.values[0], 1.0, 1e-12);
    EXPECT_NEAR(q.rho_a.values[0], 0.5, 1e-12);
}

TEST(Cues, UnpolarizedUsesNeutralAngle) {
    PolarizationCues q = compute_cues(stokes_pixel(0.4, 0, 0));
    EXPECT_EQ(q.rho_d.values[0], 0.0);
    EXPECT_EQ(q.rho_a.values[0], 0.5);
    // Below the floor the angle is ignored even when it is well defined.
    PolarizationCues tiny = compute_cues(stokes_pixel(1.0, 0.0, 5e-7));
    EXPECT_EQ(tiny.rho_a.values[0], 0.5);
}

TEST(Cues, FortyFiveDegrees) {
    PolarizationCues q = compute_cues(stokes_pixel(0.5, 0, 0.5));
    EXPECT_NEAR(q.rho_d.values[0], 1.0, 1e-12);
    EXPECT_NEAR(q.rho_a.values[0], 0.75, 1e-12);
}

TEST(Cues, ZeroIntensityIsGuarded) {
    PolarizationCues q = compute_cues(stokes_pixel(0, 0, 0));
    EXPECT_EQ(q.rho_d.values[0], 0.0);
    EXPECT_EQ(q.rho_a.values[0], 0.5);
}

TEST(Cues, PropertyRenderRecoverRoundTrip) {
    Rng rng(22);
    const int n = 1000;
    Plane s0(1, n), dolp(1, n), angle(1, n);
    for (int i = 0; i < n; ++i) {
        s0.values[i] = rng.uniform(0.05, 1.0);
        dolp.values[i] = rng.uniform(1e-6, 1.0);
        angle.values[i] = rng.uniform(-0.5, 0.5) * std::numbers::pi * 0.999;
    }
    PolarizationCues q = compute_cues(compute_stokes(render_capture(s0, dolp, angle)));
    for (int i = 0; i < n; ++i) {
        EXPECT_NEAR(q.rho_d.values[i], dolp.values[i], 1e-10);
        EXPECT_NEAR(unit_to_angle(q.rho_a.values[i]), angle.values[i], 1e-10);
    }
}

TEST(Cues, PropertyIntensityScaleEquivariance) {
    Rng rng(23);
    Plane s0(8, 8), dolp(8, 8), angle(8, 8);
    for (std::size_t i = 0; i < s0.size(); ++i) {
        s0.values[i] = rng.uniform(0.1, 0.9);
        dolp.values[i] = rng.uniform(0.0, 1.0);
        angle.values[i] = rng.uniform(-1.5, 1.5);
    }
    PolarCapture cap = render_capture(s0, dolp, angle);
    PolarizationCues ref = compute_cues(compute_stokes(cap));
    for (double k : {0.25, 0.5, 1.1}) {
        PolarCapture scaled = cap;
        for (Plane* p : {&scaled.i0, &scaled.i45, &scaled.i90, &scaled.i135})
            for (double& v : p->values) v *= k;
        PolarizationCues q = compute_cues(compute_stokes(scaled));
        for (std::size_t i = 0; i < s0.size(); ++i) {
            EXPECT_NEAR(q.rho_d.values[i], ref.rho_d.values[i], 1e-12);
            EXPECT_NEAR(q.rho_a.values[i], ref.rho_a.values[i], 1e-12);
        }
    }
}

TEST(Cues, PropertyRangesHold) {
    Rng rng(24);
    Plane a(12, 12), b(12, 12), c(12, 12), d(12, 12);
    for (Plane* p : {&a, &b, &c, &d})
        for (double& v : p->values) v = rng.uniform();
    PolarizationCues q = compute_cues(compute_stokes(PolarCapture::ingest(a, b, c, d)));
    for (std::size_t i = 0; i < q.rho_d.size(); ++i) {
        EXPECT_GE(q.rho_d.values[i], 0.0);
        EXPECT_LE(q.rho_d.values[i], 1.0);
        EXPECT_GE(q.rho_a.values[i], 0.0);
        EXPECT_LE(q.rho_a.values[i], 1.0);
    }
}

TEST(Surrogate, ConstantRgbHasNoEdges) {
    PolarizationCues q = surrogate_cues(Tensor::full({1, 3, 6, 6}, 0.4));
    for (double v : q.rho_d.values) EXPECT_EQ(v, 0.0);
    for (double v : q.rho_a.values) EXPECT_EQ(v, 0.5);
}

TEST(Surrogate, VerticalStepPeaksAtEdgeColumns) {
    const int h = 6, w = 10;
    std::vector<double> v(3 * h * w);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) v[(c * h + y) * w + x] = x >= 5 ? 1.0 : 0.0;
    PolarizationCues q = surrogate_cues(Tensor::from({1, 3, h, w}, v));
    for (int y = 0; y < h; ++y) {
        EXPECT_NEAR(q.rho_d.at(y, 4), 1.0, 1e-12);
        EXPECT_NEAR(q.rho_d.at(y, 5), 1.0, 1e-12);
        EXPECT_EQ(q.rho_d.at(y, 0), 0.0);
        EXPECT_EQ(q.rho_d.at(y, 9), 0.0);
    }
}

TEST(Surrogate, MatchesSobelOracle) {
    Rng rng(25);
    Tensor rgb = oracle::random({1, 3, 7, 9}, rng, 0, 1);
    Plane lum(7, 9);
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 9; ++x)
            lum.at(y, x) = 0.299 * rgb.at(0, 0, y, x) + 0.587 * rgb.at(0, 1, y, x) + 0.114 * rgb.at(0, 2, y, x);
    Plane ref = oracle::sobel(lum);
    double peak = 0;
    for (double v : ref.values) peak = std::max(peak, v);
    PolarizationCues q = surrogate_cues(rgb);
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(q.rho_d.values[i], ref.values[i] / peak, 1e-12);
}

TEST(Surrogate, DepthRampIsRescaled) {
    Plane depth(4, 5);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 5; ++x) depth.at(y, x) = 3.0 + 2.0 * x;
    PolarizationCues q = surrogate_cues(Tensor::full({1, 3, 4, 5}, 0.2), &depth);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 5; ++x) EXPECT_NEAR(q.rho_a.at(y, x), x / 4.0, 1e-12);
    Plane wrong(3, 5);
    EXPECT_THROW(surrogate_cues(Tensor::full({1, 3, 4, 5}, 0.2), &wrong), DimensionError);
}
