#pragma once

#include <optional>

#include "polarcod/plane.hpp"
#include "polarcod/tensor.hpp"

namespace polarcod {

// Intensities behind linear polarizers at 0, 45, 90 and 135 degrees.
struct PolarCapture {
    Plane i0;
    Plane i45;
    Plane i90;
    Plane i135;

    // Validates the shared shape and clamps all planes to [0, 1].
    static PolarCapture ingest(Plane i0, Plane i45, Plane i90, Plane i135);
    int height() const { return i0.height; }
    int width() const { return i0.width; }
};

struct StokesImage {
    Plane s0;
    Plane s1;
    Plane s2;
};

// rho_d: degree of linear polarization in [0, 1].
// rho_a: angle of linear polarization mapped from (-pi/2, pi/2] to
// angle/pi + 0.5, forced to 0.5 where rho_d is below the floor.
struct PolarizationCues {
    Plane rho_d;
    Plane rho_a;
};

inline constexpr double kDolpFloor = 1e-6;

StokesImage compute_stokes(const PolarCapture& cap);
PolarizationCues compute_cues(const StokesImage& st, double dolp_floor = kDolpFloor);

// Stand-in cues for RGB-only data: rho_d from the max-normalized Sobel
// magnitude of luminance, rho_a from min-max normalized depth (0.5 without).
// rgb: (1, 3, H, W) in [0, 1].
PolarizationCues surrogate_cues(const Tensor& rgb, const Plane* depth = nullptr);

// 3x3 Sobel gradient magnitude with replicated borders.
Plane sobel_magnitude(const Plane& p);
// Sobel magnitude divided by its maximum (eps-guarded) and clamped to [0, 1].
Plane normalized_sobel(const Plane& p);

double angle_to_unit(double angle);
double unit_to_angle(double unit);

// Renders I(theta) = (s0 + s1 cos 2theta + s2 sin 2theta) / 2 at the four
// polarizer angles, with s1 = d s0 cos 2a and s2 = d s0 sin 2a.
PolarCapture render_capture(const Plane& s0, const Plane& dolp, const Plane& angle);

}  // namespace polarcod
