#pragma once

#include <span>
#include <utility>
#include <vector>

#include "polarcod/tensor.hpp"

namespace polarcod::ops {

// Elementwise binary ops. Operands broadcast along any dimension whose
// extent is 1 in one of them.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& x, double s);
Tensor mul_scalar(const Tensor& x, double s);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor square(const Tensor& x);
Tensor cos(const Tensor& x);
Tensor sin(const Tensor& x);

// Numerically stable elementwise BCE between logits and a constant target.
Tensor bce_with_logits(const Tensor& logits, const Tensor& target);

// Reductions.
Tensor sum(const Tensor& x);      // -> (1,1,1,1)
Tensor mean(const Tensor& x);     // -> (1,1,1,1)
Tensor sum_hw(const Tensor& x);   // -> (N,C,1,1)
Tensor sum_chw(const Tensor& x);  // -> (N,1,1,1)

struct Conv2dOptions {
    int stride = 1;
    int padding = 0;
    int dilation = 1;
};

// x: (N,Cin,H,W), weight: (Cout,Cin,KH,KW), bias: (1,Cout,1,1) or undefined.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, Conv2dOptions opt = {});

// Window pooling with symmetric zero padding. Average pooling divides by the
// full window area (padding counts); max pooling ignores padded cells.
Tensor avg_pool2d(const Tensor& x, int window, int stride, int padding);
Tensor max_pool2d(const Tensor& x, int window, int stride, int padding);

// Mean of each channel plane, shape (N,C,1,1); broadcasts against x.
Tensor global_avg_pool(const Tensor& x);

struct BatchNormStats {
    std::vector<double> running_mean;
    std::vector<double> running_var;
};

// gamma/beta: (1,C,1,1). Training mode normalizes with batch statistics and
// updates `stats` in place; eval mode uses `stats`.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats,
                  bool training, double momentum = 0.1, double eps = 1e-5);

// Bilinear interpolation with half-pixel centers (align_corners = false),
// border samples clamped.
Tensor resize_bilinear(const Tensor& x, int out_h, int out_w);
Tensor upsample2x(const Tensor& x);

Tensor concat(std::span<const Tensor> parts);  // along channels
Tensor concat(std::initializer_list<Tensor> parts);
Tensor slice_channels(const Tensor& x, int begin, int count);
std::pair<Tensor, Tensor> chunk2(const Tensor& x);

// Polar decomposition helpers guarded at the origin.
// magnitude = sqrt(re^2 + im^2 + eps)
// phase     = atan2(im, re + eps*[re == 0 and im == 0])
Tensor magnitude(const Tensor& re, const Tensor& im, double eps = 1e-12);
Tensor phase(const Tensor& re, const Tensor& im, double eps = 1e-12);

// 2-D DFT over (H, W) of a packed complex tensor (N, 2C, H, W) whose first C
// channels are the real part and last C the imaginary part. Forward is
// unnormalized; inverse scales by 1/(H*W).
Tensor dft2_packed(const Tensor& packed, bool inverse);

}  // namespace polarcod::ops
