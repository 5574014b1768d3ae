#pragma once

#include <complex>
#include <span>
#include <utility>

#include "polarcod/tensor.hpp"

namespace polarcod {

// Complex frequency-domain representation of a real or complex tensor:
// two tensors of the source shape.
struct Spectrum {
    Tensor real;
    Tensor imag;
};

// Differentiable 2-D transforms over (H, W) of every (n, c) plane.
// Forward is unnormalized; the inverse applies 1/(H*W).
Spectrum fft2(const Tensor& x);
Spectrum fft2(const Spectrum& s);
Spectrum ifft2_complex(const Spectrum& s);
// Real part of the inverse transform; the imaginary residue is discarded.
Tensor ifft2(const Spectrum& s);

// amplitude = sqrt(re^2+im^2+eps), phase = atan2(im, re + eps at the origin).
std::pair<Tensor, Tensor> amp_phase(const Spectrum& s, double eps = 1e-12);
Spectrum polar_recombine(const Tensor& amplitude, const Tensor& phase);

// Averages every bin with its point reflection (-u, -v) modulo the plane size.
// An amplitude map with this symmetry, paired with the phase of a real
// signal's spectrum, inverts to a real signal.
Tensor hermitian_symmetrize(const Tensor& x);

namespace fft {

// In-place 1-D DFT (radix-2 for powers of two, direct O(n^2) otherwise).
// Unnormalized in both directions; `inverse` flips the exponent sign.
void transform1d(std::span<std::complex<double>> data, bool inverse);

// In-place row-major h*w DFT, unnormalized in both directions.
void transform2d(std::span<std::complex<double>> plane, int h, int w, bool inverse);

}  // namespace fft

}  // namespace polarcod
