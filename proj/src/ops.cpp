#include "polarcod/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>

#include <cblas.h>

#include "polarcod/error.hpp"
#include "polarcod/fft.hpp"

namespace polarcod::ops {

namespace {

using detail::Node;

std::size_t idx(const Shape& s, int n, int c, int h, int w) {
    return ((static_cast<std::size_t>(n) * s.c + c) * s.h + h) * s.w + w;
}

// ---------------------------------------------------------------------------
// Broadcasting

struct Broadcast {
    Shape out;
    std::array<std::size_t, 4> sa{};
    std::array<std::size_t, 4> sb{};
    bool same = false;
};

int merge_dim(int a, int b, const char* op, const Shape& sa, const Shape& sb) {
    if (a == b) return a;
    if (a == 1) return b;
    if (b == 1) return a;
    throw DimensionError(std::string(op) + ": shapes " + sa.str() + " and " + sb.str() + " are not broadcastable");
}

std::array<std::size_t, 4> strides_for(const Shape& s, const Shape& out) {
    std::array<std::size_t, 4> st{static_cast<std::size_t>(s.c) * s.h * s.w, static_cast<std::size_t>(s.h) * s.w,
                                  static_cast<std::size_t>(s.w), 1};
    if (s.n == 1 && out.n != 1) st[0] = 0;
    if (s.c == 1 && out.c != 1) st[1] = 0;
    if (s.h == 1 && out.h != 1) st[2] = 0;
    if (s.w == 1 && out.w != 1) st[3] = 0;
    return st;
}

Broadcast broadcast(const Shape& a, const Shape& b, const char* op) {
    Broadcast bc;
    bc.out = {merge_dim(a.n, b.n, op, a, b), merge_dim(a.c, b.c, op, a, b), merge_dim(a.h, b.h, op, a, b),
              merge_dim(a.w, b.w, op, a, b)};
    bc.same = (a == b);
    bc.sa = strides_for(a, bc.out);
    bc.sb = strides_for(b, bc.out);
    return bc;
}

template <typename F>
void for_each_broadcast(const Broadcast& bc, F&& f) {
    const Shape& o = bc.out;
    std::size_t k = 0;
    for (int n = 0; n < o.n; ++n)
        for (int c = 0; c < o.c; ++c)
            for (int h = 0; h < o.h; ++h) {
                std::size_t ia = n * bc.sa[0] + c * bc.sa[1] + h * bc.sa[2];
                std::size_t ib = n * bc.sb[0] + c * bc.sb[1] + h * bc.sb[2];
                for (int w = 0; w < o.w; ++w, ++k) {
                    f(k, ia + w * bc.sa[3], ib + w * bc.sb[3]);
                }
            }
}

// Binary elementwise op with broadcasting. Fwd(a,b) -> out;
// Da(a,b,out) / Db(a,b,out) are the local partial derivatives.
template <typename Fwd, typename Da, typename Db>
Tensor binary(const Tensor& a, const Tensor& b, const char* name, Fwd fwd, Da da, Db db) {
    Broadcast bc = broadcast(a.shape(), b.shape(), name);
    std::vector<double> out(bc.out.numel());
    auto av = a.data();
    auto bv = b.data();
    if (bc.same) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i], bv[i]);
    } else {
        for_each_broadcast(bc, [&](std::size_t k, std::size_t ia, std::size_t ib) { out[k] = fwd(av[ia], bv[ib]); });
    }
    return Tensor::make_result(bc.out, std::move(out), {a, b}, [bc, da, db](Node& self) {
        const auto& av = self.inputs[0]->value;
        const auto& bv = self.inputs[1]->value;
        const auto& g = self.grad;
        const auto& ov = self.value;
        double* ga = self.input_grad(0);
        double* gb = self.input_grad(1);
        if (bc.same) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (ga) ga[i] += g[i] * da(av[i], bv[i], ov[i]);
                if (gb) gb[i] += g[i] * db(av[i], bv[i], ov[i]);
            }
        } else {
            for_each_broadcast(bc, [&](std::size_t k, std::size_t ia, std::size_t ib) {
                if (ga) ga[ia] += g[k] * da(av[ia], bv[ib], ov[k]);
                if (gb) gb[ib] += g[k] * db(av[ia], bv[ib], ov[k]);
            });
        }
    });
}

// Unary elementwise op; D(x, out) is the local derivative.
template <typename Fwd, typename D>
Tensor unary(const Tensor& x, Fwd fwd, D d) {
    auto xv = x.data();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xv[i]);
    return Tensor::make_result(x.shape(), std::move(out), {x}, [d](Node& self) {
        const auto& xv = self.inputs[0]->value;
        const auto& ov = self.value;
        const auto& g = self.grad;
        double* gx = self.input_grad(0);
        if (!gx) return;
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * d(xv[i], ov[i]);
    });
}

double stable_sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Dense kernels used by convolution.

void limit_blas_threads() {
    // Thread-count changes could alter reduction order; pin to one.
    static std::once_flag once;
    std::call_once(once, [] { openblas_set_num_threads(1); });
}

// out[M x P] += A[M x K] * B[K x P]
void gemm_nn(const double* A, const double* B, double* out, int M, int K, int P) {
    limit_blas_threads();
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, M, P, K, 1.0, A, K, B, P, 1.0, out, P);
}

// out[M x K] += G[M x P] * B[K x P]^T
void gemm_nt(const double* G, const double* B, double* out, int M, int K, int P) {
    limit_blas_threads();
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, M, K, P, 1.0, G, P, B, P, 1.0, out, K);
}

// out[K x P] += A[M x K]^T * G[M x P]
void gemm_tn(const double* A, const double* G, double* out, int M, int K, int P) {
    limit_blas_threads();
    cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, K, P, M, 1.0, A, K, G, P, 1.0, out, P);
}

struct ConvGeom {
    int cin, h, w, kh, kw, stride, pad, dil, oh, ow;
    int K() const { return cin * kh * kw; }
    int P() const { return oh * ow; }
    bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

void im2col(const double* x, const ConvGeom& g, double* cols) {
    const int P = g.P();
    for (int c = 0; c < g.cin; ++c)
        for (int ky = 0; ky < g.kh; ++ky)
            for (int kx = 0; kx < g.kw; ++kx) {
                double* row = cols + static_cast<std::size_t>((c * g.kh + ky) * g.kw + kx) * P;
                const double* plane = x + static_cast<std::size_t>(c) * g.h * g.w;
                for (int oy = 0; oy < g.oh; ++oy) {
                    const int iy = oy * g.stride - g.pad + ky * g.dil;
                    double* r = row + static_cast<std::size_t>(oy) * g.ow;
                    if (iy < 0 || iy >= g.h) {
                        std::fill(r, r + g.ow, 0.0);
                        continue;
                    }
                    const double* src = plane + static_cast<std::size_t>(iy) * g.w;
                    for (int ox = 0; ox < g.ow; ++ox) {
                        const int ix = ox * g.stride - g.pad + kx * g.dil;
                        r[ox] = (ix >= 0 && ix < g.w) ? src[ix] : 0.0;
                    }
                }
            }
}

void col2im(const double* cols, const ConvGeom& g, double* dx) {
    const int P = g.P();
    for (int c = 0; c < g.cin; ++c)
        for (int ky = 0; ky < g.kh; ++ky)
            for (int kx = 0; kx < g.kw; ++kx) {
                const double* row = cols + static_cast<std::size_t>((c * g.kh + ky) * g.kw + kx) * P;
                double* plane = dx + static_cast<std::size_t>(c) * g.h * g.w;
                for (int oy = 0; oy < g.oh; ++oy) {
                    const int iy = oy * g.stride - g.pad + ky * g.dil;
                    if (iy < 0 || iy >= g.h) continue;
                    const double* r = row + static_cast<std::size_t>(oy) * g.ow;
                    double* dst = plane + static_cast<std::size_t>(iy) * g.w;
                    for (int ox = 0; ox < g.ow; ++ox) {
                        const int ix = ox * g.stride - g.pad + kx * g.dil;
                        if (ix >= 0 && ix < g.w) dst[ix] += r[ox];
                    }
                }
            }
}

void require_positive_spatial(const Shape& s, const char* op) {
    if (s.n <= 0 || s.c <= 0 || s.h <= 0 || s.w <= 0) {
        throw DimensionError(std::string(op) + ": empty input shape " + s.str());
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) {
    return binary(
        a, b, "add", [](double x, double y) { return x + y; }, [](double, double, double) { return 1.0; },
        [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary(
        a, b, "sub", [](double x, double y) { return x - y; }, [](double, double, double) { return 1.0; },
        [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary(
        a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y, double) { return y; },
        [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary(
        a, b, "div", [](double x, double y) { return x / y; }, [](double, double y, double) { return 1.0 / y; },
        [](double, double y, double o) { return -o / y; });
}

Tensor add_scalar(const Tensor& x, double s) {
    return unary(x, [s](double v) { return v + s; }, [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& x, double s) {
    return unary(x, [s](double v) { return v * s; }, [s](double, double) { return s; });
}

Tensor relu(const Tensor& x) {
    return unary(x, [](double v) { return v > 0 ? v : 0.0; }, [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
    return unary(x, stable_sigmoid, [](double, double o) { return o * (1.0 - o); });
}

Tensor square(const Tensor& x) {
    return unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor cos(const Tensor& x) {
    return unary(x, [](double v) { return std::cos(v); }, [](double v, double) { return -std::sin(v); });
}

Tensor sin(const Tensor& x) {
    return unary(x, [](double v) { return std::sin(v); }, [](double v, double) { return std::cos(v); });
}

Tensor bce_with_logits(const Tensor& logits, const Tensor& target) {
    if (logits.shape() != target.shape()) {
        throw DimensionError("bce_with_logits: logits " + logits.shape().str() + " vs target " +
                             target.shape().str());
    }
    auto xv = logits.data();
    auto tv = target.data();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = xv[i];
        out[i] = std::max(x, 0.0) - x * tv[i] + std::log1p(std::exp(-std::abs(x)));
    }
    return Tensor::make_result(logits.shape(), std::move(out), {logits, target}, [](Node& self) {
        const auto& xv = self.inputs[0]->value;
        const auto& tv = self.inputs[1]->value;
        double* gx = self.input_grad(0);
        double* gt = self.input_grad(1);
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if (gx) gx[i] += self.grad[i] * (stable_sigmoid(xv[i]) - tv[i]);
            if (gt) gt[i] += self.grad[i] * (-xv[i]);
        }
    });
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    return Tensor::make_result({1, 1, 1, 1}, {s}, {x}, [](Node& self) {
        double* gx = self.input_grad(0);
        if (!gx) return;
        const double g = self.grad[0];
        for (std::size_t i = 0; i < self.inputs[0]->value.size(); ++i) gx[i] += g;
    });
}

Tensor mean(const Tensor& x) {
    const double inv = 1.0 / static_cast<double>(x.numel());
    return mul_scalar(sum(x), inv);
}

Tensor sum_hw(const Tensor& x) {
    const Shape s = x.shape();
    const std::size_t plane = s.plane();
    auto xv = x.data();
    std::vector<double> out(static_cast<std::size_t>(s.n) * s.c, 0.0);
    for (std::size_t p = 0; p < out.size(); ++p) {
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) acc += xv[p * plane + i];
        out[p] = acc;
    }
    return Tensor::make_result({s.n, s.c, 1, 1}, std::move(out), {x}, [plane](Node& self) {
        double* gx = self.input_grad(0);
        if (!gx) return;
        for (std::size_t p = 0; p < self.grad.size(); ++p)
            for (std::size_t i = 0; i < plane; ++i) gx[p * plane + i] += self.grad[p];
    });
}

Tensor sum_chw(const Tensor& x) {
    const Shape s = x.shape();
    const std::size_t per = static_cast<std::size_t>(s.c) * s.plane();
    auto xv = x.data();
    std::vector<double> out(s.n, 0.0);
    for (int n = 0; n < s.n; ++n) {
        double acc = 0.0;
        for (std::size_t i = 0; i < per; ++i) acc += xv[n * per + i];
        out[n] = acc;
    }
    return Tensor::make_result({s.n, 1, 1, 1}, std::move(out), {x}, [per](Node& self) {
        double* gx = self.input_grad(0);
        if (!gx) return;
        for (std::size_t n = 0; n < self.grad.size(); ++n)
            for (std::size_t i = 0; i < per; ++i) gx[n * per + i] += self.grad[n];
    });
}

// ---------------------------------------------------------------------------
// Convolution

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, Conv2dOptions opt) {
    const Shape xs = x.shape();
    const Shape ws = weight.shape();
    require_positive_spatial(xs, "conv2d");
    if (ws.c != xs.c) {
        throw DimensionError("conv2d: kernel expects " + std::to_string(ws.c) + " input channels, input " +
                             xs.str() + " has " + std::to_string(xs.c));
    }
    if (opt.stride < 1 || opt.dilation < 1 || opt.padding < 0) {
        throw DimensionError("conv2d: stride/dilation must be >= 1 and padding >= 0");
    }
    if (bias.defined() && (bias.numel() != static_cast<std::size_t>(ws.n))) {
        throw DimensionError("conv2d: bias length " + std::to_string(bias.numel()) + " != output channels " +
                             std::to_string(ws.n));
    }
    ConvGeom g{xs.c, xs.h, xs.w, ws.h, ws.w, opt.stride, opt.padding, opt.dilation, 0, 0};
    const int eff_h = opt.dilation * (ws.h - 1) + 1;
    const int eff_w = opt.dilation * (ws.w - 1) + 1;
    if (xs.h + 2 * opt.padding < eff_h || xs.w + 2 * opt.padding < eff_w) {
        throw DimensionError("conv2d: kernel extent " + std::to_string(eff_h) + "x" + std::to_string(eff_w) +
                             " exceeds padded input " + xs.str());
    }
    g.oh = (xs.h + 2 * opt.padding - eff_h) / opt.stride + 1;
    g.ow = (xs.w + 2 * opt.padding - eff_w) / opt.stride + 1;
    const int K = g.K();
    const int P = g.P();
    const int cout = ws.n;
    const Shape os{xs.n, cout, g.oh, g.ow};

    const bool pointwise = g.pointwise();
    auto xv = x.data();
    auto wv = weight.data();
    std::vector<double> cols;
    if (!pointwise) cols.resize(static_cast<std::size_t>(xs.n) * K * P);
    std::vector<double> out(os.numel(), 0.0);
    const std::size_t in_per = static_cast<std::size_t>(xs.c) * xs.h * xs.w;
    const std::size_t out_per = static_cast<std::size_t>(cout) * P;
    for (int n = 0; n < xs.n; ++n) {
        const double* cn;
        if (pointwise) {
            cn = xv.data() + n * in_per;
        } else {
            double* c = cols.data() + static_cast<std::size_t>(n) * K * P;
            im2col(xv.data() + n * in_per, g, c);
            cn = c;
        }
        double* o = out.data() + n * out_per;
        if (bias.defined()) {
            auto bv = bias.data();
            for (int co = 0; co < cout; ++co) std::fill(o + co * P, o + (co + 1) * P, bv[co]);
        }
        gemm_nn(wv.data(), cn, o, cout, K, P);
    }

    std::vector<Tensor> inputs{x, weight};
    if (bias.defined()) inputs.push_back(bias);
    return Tensor::make_result(
        os, std::move(out), std::move(inputs),
        [g, cout, cols = std::move(cols), pointwise, n_batch = xs.n, in_per, out_per](Node& self) {
            const int K = g.K();
            const int P = g.P();
            const auto& xv = self.inputs[0]->value;
            const auto& wv = self.inputs[1]->value;
            double* gx = self.input_grad(0);
            double* gw = self.input_grad(1);
            double* gb = self.inputs.size() > 2 ? self.input_grad(2) : nullptr;
            std::vector<double> dcols;
            if (gx && !pointwise) dcols.resize(static_cast<std::size_t>(K) * P);
            for (int n = 0; n < n_batch; ++n) {
                const double* go = self.grad.data() + n * out_per;
                const double* cn = pointwise ? xv.data() + n * in_per : cols.data() + static_cast<std::size_t>(n) * K * P;
                if (gw) gemm_nt(go, cn, gw, cout, K, P);
                if (gb) {
                    for (int co = 0; co < cout; ++co) {
                        double acc = 0.0;
                        for (int p = 0; p < P; ++p) acc += go[co * P + p];
                        gb[co] += acc;
                    }
                }
                if (gx) {
                    if (pointwise) {
                        gemm_tn(wv.data(), go, gx + n * in_per, cout, K, P);
                    } else {
                        std::fill(dcols.begin(), dcols.end(), 0.0);
                        gemm_tn(wv.data(), go, dcols.data(), cout, K, P);
                        col2im(dcols.data(), g, gx + n * in_per);
                    }
                }
            }
        });
}

// ---------------------------------------------------------------------------
// Pooling

namespace {

struct PoolGeom {
    int oh, ow;
};

PoolGeom pool_geom(const Shape& s, int window, int stride, int padding, const char* op) {
    require_positive_spatial(s, op);
    if (window < 1 || stride < 1 || padding < 0) {
        throw DimensionError(std::string(op) + ": window and stride must be >= 1, padding >= 0");
    }
    if (window > s.h + 2 * padding || window > s.w + 2 * padding) {
        throw DimensionError(std::string(op) + ": window " + std::to_string(window) + " larger than padded input " +
                             s.str());
    }
    return {(s.h + 2 * padding - window) / stride + 1, (s.w + 2 * padding - window) / stride + 1};
}

}  // namespace

Tensor avg_pool2d(const Tensor& x, int window, int stride, int padding) {
    const Shape s = x.shape();
    const PoolGeom pg = pool_geom(s, window, stride, padding, "avg_pool2d");
    const Shape os{s.n, s.c, pg.oh, pg.ow};
    const double inv = 1.0 / (static_cast<double>(window) * window);
    auto xv = x.data();
    std::vector<double> out(os.numel());
    std::size_t k = 0;
    for (int p = 0; p < s.n * s.c; ++p) {
        const double* plane = xv.data() + static_cast<std::size_t>(p) * s.plane();
        for (int oy = 0; oy < pg.oh; ++oy)
            for (int ox = 0; ox < pg.ow; ++ox, ++k) {
                const int y0 = oy * stride - padding;
                const int x0 = ox * stride - padding;
                double acc = 0.0;
                for (int y = std::max(y0, 0); y < std::min(y0 + window, s.h); ++y)
                    for (int xx = std::max(x0, 0); xx < std::min(x0 + window, s.w); ++xx) acc += plane[y * s.w + xx];
                out[k] = acc * inv;
            }
    }
    return Tensor::make_result(os, std::move(out), {x}, [s, pg, window, stride, padding, inv](Node& self) {
        double* gx = self.input_grad(0);
        if (!gx) return;
        std::size_t k = 0;
        for (int p = 0; p < s.n * s.c; ++p) {
            double* plane = gx + static_cast<std::size_t>(p) * s.plane();
            for (int oy = 0; oy < pg.oh; ++oy)
                for (int ox = 0; ox < pg.ow; ++ox, ++k) {
                    const double g = self.grad[k] * inv;
                    const int y0 = oy * stride - padding;
                    const int x0 = ox * stride - padding;
                    for (int y = std::max(y0, 0); y < std::min(y0 + window, s.h); ++y)
                        for (int xx = std::max(x0, 0); xx < std::min(x0 + window, s.w); ++xx) plane[y * s.w + xx] += g;
                }
        }
    });
}

Tensor max_pool2d(const Tensor& x, int window, int stride, int padding) {
    const Shape s = x.shape();
    const PoolGeom pg = pool_geom(s, window, stride, padding, "max_pool2d");
    if (padding * 2 >= window) {
        // Every window must overlap the input.
        throw DimensionError("max_pool2d: padding must be smaller than half the window");
    }
    const Shape os{s.n, s.c, pg.oh, pg.ow};
    auto xv = x.data();
    std::vector<double> out(os.numel());
    std::vector<std::size_t> argmax(os.numel());
    std::size_t k = 0;
    for (int p = 0; p < s.n * s.c; ++p) {
        const std::size_t base = static_cast<std::size_t>(p) * s.plane();
        for (int oy = 0; oy < pg.oh; ++oy)
            for (int ox = 0; ox < pg.ow; ++ox, ++k) {
                const int y0 = oy * stride - padding;
                const int x0 = ox * stride - padding;
                double best = -std::numeric_limits<double>::infinity();
                std::size_t bi = base;
                for (int y = std::max(y0, 0); y < std::min(y0 + window, s.h); ++y)
                    for (int xx = std::max(x0, 0); xx < std::min(x0 + window, s.w); ++xx) {
                        const std::size_t i = base + static_cast<std::size_t>(y) * s.w + xx;
                        if (xv[i] > best) {
                            best = xv[i];
                            bi = i;
                        }
                    }
                out[k] = best;
                argmax[k] = bi;
            }
    }
    return Tensor::make_result(os, std::move(out), {x}, [argmax = std::move(argmax)](Node& self) {
        double* gx = self.input_grad(0);
        if (!gx) return;
        for (std::size_t k = 0; k < argmax.size(); ++k) gx[argmax[k]] += self.grad[k];
    });
}

Tensor global_avg_pool(const Tensor& x) {
    require_positive_spatial(x.shape(), "global_avg_pool");
    return mul_scalar(sum_hw(x), 1.0 / static_cast<double>(x.shape().plane()));
}

// ---------------------------------------------------------------------------
// Batch normalization

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats, bool training,
                  double momentum, double eps) {
    const Shape s = x.shape();
    require_positive_spatial(s, "batch_norm");
    const int C = s.c;
    if (gamma.numel() != static_cast<std::size_t>(C) || beta.numel() != static_cast<std::size_t>(C) ||
        stats.running_mean.size() != static_cast<std::size_t>(C) ||
        stats.running_var.size() != static_cast<std::size_t>(C)) {
        throw DimensionError("batch_norm: parameter length does not match channels of " + s.str());
    }
    const std::size_t plane = s.plane();
    const std::size_t M = static_cast<std::size_t>(s.n) * plane;
    auto xv = x.data();
    auto gv = gamma.data();
    auto bv = beta.data();
    std::vector<double> mean(C), inv_std(C);
    for (int c = 0; c < C; ++c) {
        if (training) {
            double acc = 0.0;
            for (int n = 0; n < s.n; ++n)
                for (std::size_t i = 0; i < plane; ++i) acc += xv[idx(s, n, c, 0, 0) + i];
            const double mu = acc / static_cast<double>(M);
            double var = 0.0;
            for (int n = 0; n < s.n; ++n)
                for (std::size_t i = 0; i < plane; ++i) {
                    const double d = xv[idx(s, n, c, 0, 0) + i] - mu;
                    var += d * d;
                }
            var /= static_cast<double>(M);
            mean[c] = mu;
            inv_std[c] = 1.0 / std::sqrt(var + eps);
            const double unbiased = M > 1 ? var * static_cast<double>(M) / static_cast<double>(M - 1) : var;
            stats.running_mean[c] = (1.0 - momentum) * stats.running_mean[c] + momentum * mu;
            stats.running_var[c] = (1.0 - momentum) * stats.running_var[c] + momentum * unbiased;
        } else {
            mean[c] = stats.running_mean[c];
            inv_std[c] = 1.0 / std::sqrt(stats.running_var[c] + eps);
        }
    }
    std::vector<double> xhat(s.numel());
    std::vector<double> out(s.numel());
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < C; ++c) {
            const std::size_t base = idx(s, n, c, 0, 0);
            for (std::size_t i = 0; i < plane; ++i) {
                const double h = (xv[base + i] - mean[c]) * inv_std[c];
                xhat[base + i] = h;
                out[base + i] = gv[c] * h + bv[c];
            }
        }
    return Tensor::make_result(
        s, std::move(out), {x, gamma, beta},
        [s, plane, M, training, inv_std = std::move(inv_std), xhat = std::move(xhat)](Node& self) {
            const auto& g = self.grad;
            const auto& gv = self.inputs[1]->value;
            double* gx = self.input_grad(0);
            double* ggamma = self.input_grad(1);
            double* gbeta = self.input_grad(2);
            for (int c = 0; c < s.c; ++c) {
                double sum_g = 0.0, sum_gx = 0.0;
                for (int n = 0; n < s.n; ++n) {
                    const std::size_t base = idx(s, n, c, 0, 0);
                    for (std::size_t i = 0; i < plane; ++i) {
                        sum_g += g[base + i];
                        sum_gx += g[base + i] * xhat[base + i];
                    }
                }
                if (ggamma) ggamma[c] += sum_gx;
                if (gbeta) gbeta[c] += sum_g;
                if (!gx) continue;
                const double scale = gv[c] * inv_std[c];
                if (training) {
                    const double inv_m = 1.0 / static_cast<double>(M);
                    for (int n = 0; n < s.n; ++n) {
                        const std::size_t base = idx(s, n, c, 0, 0);
                        for (std::size_t i = 0; i < plane; ++i) {
                            gx[base + i] += scale * (g[base + i] - inv_m * sum_g - xhat[base + i] * inv_m * sum_gx);
                        }
                    }
                } else {
                    for (int n = 0; n < s.n; ++n) {
                        const std::size_t base = idx(s, n, c, 0, 0);
                        for (std::size_t i = 0; i < plane; ++i) gx[base + i] += scale * g[base + i];
                    }
                }
            }
        });
}

// ---------------------------------------------------------------------------
// Resampling and channel bookkeeping

namespace {

struct Interp {
    int i0, i1;
    double l0, l1;
};

std::vector<Interp> interp_table(int in, int out) {
    std::vector<Interp> t(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (int o = 0; o < out; ++o) {
        double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
        if (src < 0) src = 0;
        int i0 = static_cast<int>(src);
        if (i0 > in - 1) i0 = in - 1;
        const int i1 = i0 < in - 1 ? i0 + 1 : i0;
        const double l1 = src - i0;
        t[o] = {i0, i1, 1.0 - l1, l1};
    }
    return t;
}

}  // namespace

Tensor resize_bilinear(const Tensor& x, int out_h, int out_w) {
    const Shape s = x.shape();
    require_positive_spatial(s, "resize_bilinear");
    if (out_h < 1 || out_w < 1) throw DimensionError("resize_bilinear: target size must be positive");
    if (out_h == s.h && out_w == s.w) {
        // Half-pixel mapping at scale 1 is the identity.
        return mul_scalar(x, 1.0);
    }
    auto ty = interp_table(s.h, out_h);
    auto tx = interp_table(s.w, out_w);
    const Shape os{s.n, s.c, out_h, out_w};
    auto xv = x.data();
    std::vector<double> out(os.numel());
    std::size_t k = 0;
    for (int p = 0; p < s.n * s.c; ++p) {
        const double* plane = xv.data() + static_cast<std::size_t>(p) * s.plane();
        for (int oy = 0; oy < out_h; ++oy) {
            const Interp& a = ty[oy];
            const double* r0 = plane + static_cast<std::size_t>(a.i0) * s.w;
            const double* r1 = plane + static_cast<std::size_t>(a.i1) * s.w;
            for (int ox = 0; ox < out_w; ++ox, ++k) {
                const Interp& b = tx[ox];
                out[k] = a.l0 * (b.l0 * r0[b.i0] + b.l1 * r0[b.i1]) + a.l1 * (b.l0 * r1[b.i0] + b.l1 * r1[b.i1]);
            }
        }
    }
    return Tensor::make_result(os, std::move(out), {x}, [s, out_h, out_w, ty, tx](Node& self) {
        double* gx = self.input_grad(0);
        if (!gx) return;
        std::size_t k = 0;
        for (int p = 0; p < s.n * s.c; ++p) {
            double* plane = gx + static_cast<std::size_t>(p) * s.plane();
            for (int oy = 0; oy < out_h; ++oy) {
                const Interp& a = ty[oy];
                double* r0 = plane + static_cast<std::size_t>(a.i0) * s.w;
                double* r1 = plane + static_cast<std::size_t>(a.i1) * s.w;
                for (int ox = 0; ox < out_w; ++ox, ++k) {
                    const Interp& b = tx[ox];
                    const double g = self.grad[k];
                    r0[b.i0] += g * a.l0 * b.l0;
                    r0[b.i1] += g * a.l0 * b.l1;
                    r1[b.i0] += g * a.l1 * b.l0;
                    r1[b.i1] += g * a.l1 * b.l1;
                }
            }
        }
    });
}

Tensor upsample2x(const Tensor& x) { return resize_bilinear(x, x.shape().h * 2, x.shape().w * 2); }

Tensor concat(std::span<const Tensor> parts) {
    if (parts.empty()) throw DimensionError("concat: no inputs");
    Shape os = parts[0].shape();
    os.c = 0;
    for (const auto& t : parts) {
        const Shape& s = t.shape();
        if (s.n != os.n || s.h != os.h || s.w != os.w) {
            throw DimensionError("concat: shape " + s.str() + " incompatible with " + parts[0].shape().str());
        }
        os.c += s.c;
    }
    const std::size_t plane = os.plane();
    std::vector<double> out(os.numel());
    std::vector<int> channels;
    int c0 = 0;
    for (const auto& t : parts) {
        const Shape& s = t.shape();
        auto v = t.data();
        for (int n = 0; n < os.n; ++n) {
            std::copy_n(v.data() + static_cast<std::size_t>(n) * s.c * plane, static_cast<std::size_t>(s.c) * plane,
                        out.data() + (static_cast<std::size_t>(n) * os.c + c0) * plane);
        }
        channels.push_back(s.c);
        c0 += s.c;
    }
    return Tensor::make_result(os, std::move(out), std::vector<Tensor>(parts.begin(), parts.end()),
                               [os, plane, channels](Node& self) {
                                   int c0 = 0;
                                   for (std::size_t i = 0; i < channels.size(); ++i) {
                                       const int c = channels[i];
                                       double* g = self.input_grad(i);
                                       if (g) {
                                           for (int n = 0; n < os.n; ++n) {
                                               const double* src =
                                                   self.grad.data() + (static_cast<std::size_t>(n) * os.c + c0) * plane;
                                               double* dst = g + static_cast<std::size_t>(n) * c * plane;
                                               for (std::size_t k = 0; k < static_cast<std::size_t>(c) * plane; ++k)
                                                   dst[k] += src[k];
                                           }
                                       }
                                       c0 += c;
                                   }
                               });
}

Tensor concat(std::initializer_list<Tensor> parts) {
    return concat(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor slice_channels(const Tensor& x, int begin, int count) {
    const Shape s = x.shape();
    if (begin < 0 || count < 0 || begin + count > s.c) {
        throw DimensionError("slice_channels: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                             ") outside " + s.str());
    }
    const Shape os{s.n, count, s.h, s.w};
    const std::size_t plane = s.plane();
    auto v = x.data();
    std::vector<double> out(os.numel());
    for (int n = 0; n < s.n; ++n) {
        std::copy_n(v.data() + (static_cast<std::size_t>(n) * s.c + begin) * plane, static_cast<std::size_t>(count) * plane,
                    out.data() + static_cast<std::size_t>(n) * count * plane);
    }
    return Tensor::make_result(os, std::move(out), {x}, [s, begin, count, plane](Node& self) {
        double* g = self.input_grad(0);
        if (!g) return;
        for (int n = 0; n < s.n; ++n) {
            const double* src = self.grad.data() + static_cast<std::size_t>(n) * count * plane;
            double* dst = g + (static_cast<std::size_t>(n) * s.c + begin) * plane;
            for (std::size_t k = 0; k < static_cast<std::size_t>(count) * plane; ++k) dst[k] += src[k];
        }
    });
}

std::pair<Tensor, Tensor> chunk2(const Tensor& x) {
    const int c = x.shape().c;
    if (c % 2 != 0) throw DimensionError("chunk2: channel count " + std::to_string(c) + " is odd");
    return {slice_channels(x, 0, c / 2), slice_channels(x, c / 2, c / 2)};
}

// ---------------------------------------------------------------------------
// Polar helpers and DFT

Tensor magnitude(const Tensor& re, const Tensor& im, double eps) {
    if (re.shape() != im.shape()) throw DimensionError("magnitude: real/imag shape mismatch");
    auto rv = re.data();
    auto iv = im.data();
    std::vector<double> out(rv.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(rv[i] * rv[i] + iv[i] * iv[i] + eps);
    return Tensor::make_result(re.shape(), std::move(out), {re, im}, [](Node& self) {
        const auto& rv = self.inputs[0]->value;
        const auto& iv = self.inputs[1]->value;
        double* gr = self.input_grad(0);
        double* gi = self.input_grad(1);
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double g = self.grad[i] / self.value[i];
            if (gr) gr[i] += g * rv[i];
            if (gi) gi[i] += g * iv[i];
        }
    });
}

Tensor phase(const Tensor& re, const Tensor& im, double eps) {
    if (re.shape() != im.shape()) throw DimensionError("phase: real/imag shape mismatch");
    auto rv = re.data();
    auto iv = im.data();
    std::vector<double> out(rv.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double r = (rv[i] == 0.0 && iv[i] == 0.0) ? eps : rv[i];
        out[i] = std::atan2(iv[i], r);
    }
    return Tensor::make_result(re.shape(), std::move(out), {re, im}, [eps](Node& self) {
        const auto& rv = self.inputs[0]->value;
        const auto& iv = self.inputs[1]->value;
        double* gr = self.input_grad(0);
        double* gi = self.input_grad(1);
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            // d atan2(im, re) with the squared radius regularized by eps.
            const double r2 = rv[i] * rv[i] + iv[i] * iv[i] + eps;
            if (gr) gr[i] += self.grad[i] * (-iv[i] / r2);
            if (gi) gi[i] += self.grad[i] * (rv[i] / r2);
        }
    });
}

namespace {

// Transforms each (n, c) complex plane of a packed tensor. `scale` multiplies the result.
std::vector<double> packed_transform(const std::vector<double>& v, const Shape& s, bool inverse, double scale) {
    const int C = s.c / 2;
    const std::size_t plane = s.plane();
    std::vector<double> out(v.size());
    std::vector<std::complex<double>> buf(plane);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < C; ++c) {
            const std::size_t re = (static_cast<std::size_t>(n) * s.c + c) * plane;
            const std::size_t im = (static_cast<std::size_t>(n) * s.c + c + C) * plane;
            for (std::size_t k = 0; k < plane; ++k) buf[k] = {v[re + k], v[im + k]};
            fft::transform2d(buf, s.h, s.w, inverse);
            for (std::size_t k = 0; k < plane; ++k) {
                out[re + k] = buf[k].real() * scale;
                out[im + k] = buf[k].imag() * scale;
            }
        }
    return out;
}

}  // namespace

Tensor dft2_packed(const Tensor& packed, bool inverse) {
    const Shape s = packed.shape();
    require_positive_spatial(s, "dft2");
    if (s.c % 2 != 0) throw DimensionError("dft2: packed complex tensor needs an even channel count");
    const double norm = 1.0 / static_cast<double>(s.plane());
    std::vector<double> in(packed.data().begin(), packed.data().end());
    std::vector<double> out = packed_transform(in, s, inverse, inverse ? norm : 1.0);
    return Tensor::make_result(s, std::move(out), {packed}, [s, inverse, norm](Node& self) {
        double* g = self.input_grad(0);
        if (!g) return;
        // Adjoint of an (optionally scaled) DFT is the conjugate transform with the same scale.
        std::vector<double> back = packed_transform(self.grad, s, !inverse, inverse ? norm : 1.0);
        for (std::size_t i = 0; i < back.size(); ++i) g[i] += back[i];
    });
}

}  // namespace polarcod::ops
