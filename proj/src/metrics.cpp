#include "polarcod/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "polarcod/error.hpp"

namespace polarcod {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void validate(const Plane& pred, const Plane& gt) {
    if (!pred.same_shape(gt)) throw DimensionError("evaluate: prediction and ground truth differ in size");
    if (pred.size() == 0) throw DimensionError("evaluate: empty image");
    for (double v : pred.values) {
        if (!(v >= 0.0 && v <= 1.0)) throw DataError("evaluate: prediction value " + std::to_string(v) + " outside [0, 1]");
    }
    for (double v : gt.values) {
        if (v != 0.0 && v != 1.0) throw DataError("evaluate: ground truth must be binary");
    }
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Similarity of the foreground (or background) values to a uniform 1.
double object_similarity(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    const double m = mean_of(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / static_cast<double>(std::max<std::size_t>(values.size() - 1, 1)));
    return 2.0 * m / (m * m + 1.0 + sd + kEps);
}

double object_score(const Plane& pred, const Plane& gt) {
    std::vector<double> fg, bg;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt.values[i] == 1.0) {
            fg.push_back(pred.values[i]);
        } else {
            bg.push_back(1.0 - pred.values[i]);
        }
    }
    const double u = static_cast<double>(fg.size()) / static_cast<double>(gt.size());
    return u * object_similarity(fg) + (1.0 - u) * object_similarity(bg);
}

// SSIM-style structural similarity of one rectangular block.
double block_ssim(const Plane& pred, const Plane& gt, int y0, int y1, int x0, int x1) {
    const double n = static_cast<double>(y1 - y0) * (x1 - x0);
    double mx = 0.0, my = 0.0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            mx += pred.at(y, x);
            my += gt.at(y, x);
        }
    mx /= n;
    my /= n;
    double vx = 0.0, vy = 0.0, cxy = 0.0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            const double dx = pred.at(y, x) - mx;
            const double dy = gt.at(y, x) - my;
            vx += dx * dx;
            vy += dy * dy;
            cxy += dx * dy;
        }
    const double denom = std::max(n - 1.0, 1.0);
    vx /= denom;
    vy /= denom;
    cxy /= denom;
    const double a = 4.0 * mx * my * cxy;
    const double b = (mx * mx + my * my) * (vx + vy);
    if (a != 0.0) return a / (b + kEps);
    return b == 0.0 ? 1.0 : 0.0;
}

double region_score(const Plane& pred, const Plane& gt) {
    const int h = gt.height;
    const int w = gt.width;
    double sy = 0.0, sx = 0.0, count = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (gt.at(y, x) == 1.0) {
                sy += y;
                sx += x;
                count += 1.0;
            }
    // Split point one past the (half-to-even rounded) centroid.
    int cx, cy;
    if (count == 0.0) {
        cx = static_cast<int>(std::nearbyint(w / 2.0)) + 1;
        cy = static_cast<int>(std::nearbyint(h / 2.0)) + 1;
    } else {
        cx = static_cast<int>(std::nearbyint(sx / count)) + 1;
        cy = static_cast<int>(std::nearbyint(sy / count)) + 1;
    }
    cx = std::min(cx, w);
    cy = std::min(cy, h);
    const double area = static_cast<double>(h) * w;
    const int ys[3] = {0, cy, h};
    const int xs[3] = {0, cx, w};
    double score = 0.0;
    for (int qy = 0; qy < 2; ++qy)
        for (int qx = 0; qx < 2; ++qx) {
            const int y0 = ys[qy], y1 = ys[qy + 1], x0 = xs[qx], x1 = xs[qx + 1];
            if (y1 <= y0 || x1 <= x0) continue;
            const double weight = static_cast<double>(y1 - y0) * (x1 - x0) / area;
            score += weight * block_ssim(pred, gt, y0, y1, x0, x1);
        }
    return score;
}

// Normalized 7x7 Gaussian with sigma 5.
std::array<double, 49> gaussian7() {
    std::array<double, 49> k{};
    double total = 0.0;
    for (int y = -3; y <= 3; ++y)
        for (int x = -3; x <= 3; ++x) {
            const double v = std::exp(-(x * x + y * y) / (2.0 * 25.0));
            k[(y + 3) * 7 + (x + 3)] = v;
            total += v;
        }
    for (double& v : k) v /= total;
    return k;
}

}  // namespace

namespace metrics {

double mae(const Plane& pred, const Plane& gt) {
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred.values[i] - gt.values[i]);
    return s / static_cast<double>(pred.size());
}

double s_alpha(const Plane& pred, const Plane& gt) {
    double fg = 0.0, mp = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        fg += gt.values[i];
        mp += pred.values[i];
    }
    const double n = static_cast<double>(gt.size());
    if (fg == 0.0) return 1.0 - mp / n;
    if (fg == n) return mp / n;
    const double s = 0.5 * object_score(pred, gt) + 0.5 * region_score(pred, gt);
    return std::max(s, 0.0);
}

double e_phi(const Plane& pred, const Plane& gt) {
    const double n = static_cast<double>(gt.size());
    double fg = 0.0, mp = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        fg += gt.values[i];
        mp += pred.values[i];
    }
    double total = 0.0;
    if (fg == 0.0) {
        for (double p : pred.values) total += 1.0 - p;
    } else if (fg == n) {
        for (double p : pred.values) total += p;
    } else {
        const double mg = fg / n;
        mp /= n;
        for (std::size_t i = 0; i < gt.size(); ++i) {
            const double dp = pred.values[i] - mp;
            const double dg = gt.values[i] - mg;
            const double align = 2.0 * dp * dg / (dp * dp + dg * dg + kEps);
            total += (align + 1.0) * (align + 1.0) / 4.0;
        }
    }
    return total / n;
}

double f_beta_w(const Plane& pred, const Plane& gt) {
    const int h = gt.height;
    const int w = gt.width;
    std::vector<std::pair<int, int>> fg;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (gt.at(y, x) == 1.0) fg.emplace_back(y, x);
    if (fg.empty()) return 0.0;

    Plane err(h, w), spread(h, w), dist(h, w);
    for (std::size_t i = 0; i < err.size(); ++i) err.values[i] = std::abs(pred.values[i] - gt.values[i]);
    // Background pixels inherit the error of their nearest foreground pixel
    // (first in row-major order on ties).
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (gt.at(y, x) == 1.0) {
                spread.at(y, x) = err.at(y, x);
                continue;
            }
            long best = std::numeric_limits<long>::max();
            std::pair<int, int> arg{0, 0};
            for (const auto& [fy, fx] : fg) {
                const long d = static_cast<long>(fy - y) * (fy - y) + static_cast<long>(fx - x) * (fx - x);
                if (d < best) {
                    best = d;
                    arg = {fy, fx};
                }
            }
            spread.at(y, x) = err.at(arg.first, arg.second);
            dist.at(y, x) = std::sqrt(static_cast<double>(best));
        }
    // Gaussian smoothing with zero padding.
    static const std::array<double, 49> kernel = gaussian7();
    Plane smooth(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int ky = -3; ky <= 3; ++ky)
                for (int kx = -3; kx <= 3; ++kx) {
                    const int yy = y + ky, xx = x + kx;
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                    acc += kernel[(ky + 3) * 7 + (kx + 3)] * spread.at(yy, xx);
                }
            smooth.at(y, x) = acc;
        }
    double fg_count = 0.0, fg_err = 0.0, bg_err = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double e = err.at(y, x);
            if (gt.at(y, x) == 1.0) {
                e = std::min(e, smooth.at(y, x));
                fg_count += 1.0;
                fg_err += e;
            } else {
                e *= 2.0 - std::exp(std::log(0.5) / 5.0 * dist.at(y, x));
                bg_err += e;
            }
        }
    const double tp = fg_count - fg_err;
    const double recall = 1.0 - fg_err / fg_count;
    const double precision = tp / (tp + bg_err + kEps);
    return 2.0 * recall * precision / (recall + precision + kEps);
}

BinaryCounts binary_counts(const Plane& pred, const Plane& gt, double threshold) {
    BinaryCounts c;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const bool p = pred.values[i] >= threshold;
        const bool g = gt.values[i] == 1.0;
        if (p && g) c.tp += 1;
        else if (p) c.fp += 1;
        else if (g) c.fn += 1;
        else c.tn += 1;
    }
    return c;
}

}  // namespace metrics

MetricsReport evaluate(const Plane& pred, const Plane& gt) {
    validate(pred, gt);
    MetricsReport r;
    r.mae = metrics::mae(pred, gt);
    r.s_alpha = metrics::s_alpha(pred, gt);
    r.e_phi = metrics::e_phi(pred, gt);
    r.f_beta_w = metrics::f_beta_w(pred, gt);
    const auto c = metrics::binary_counts(pred, gt);
    const double uni = c.tp + c.fp + c.fn;
    r.iou = uni == 0.0 ? 1.0 : c.tp / uni;
    const double pos = c.tp + c.fn;
    const double neg = c.tn + c.fp;
    if (pos == 0.0) {
        r.ber = 100.0 * (1.0 - c.tn / neg);
    } else if (neg == 0.0) {
        r.ber = 100.0 * (1.0 - c.tp / pos);
    } else {
        r.ber = 100.0 * (1.0 - 0.5 * (c.tp / pos + c.tn / neg));
    }
    r.oa = (c.tp + c.tn) / static_cast<double>(gt.size());
    if (uni == 0.0) {
        r.f_beta = 1.0;
    } else if (c.tp == 0.0) {
        r.f_beta = 0.0;
    } else {
        const double precision = c.tp / (c.tp + c.fp);
        const double recall = c.tp / pos;
        r.f_beta = 1.3 * precision * recall / (0.3 * precision + recall);
    }
    return r;
}

MetricsReport mean_report(const std::vector<MetricsReport>& reports) {
    MetricsReport m;
    if (reports.empty()) return m;
    for (const auto& r : reports) {
        m.s_alpha += r.s_alpha;
        m.e_phi += r.e_phi;
        m.f_beta_w += r.f_beta_w;
        m.mae += r.mae;
        m.iou += r.iou;
        m.ber += r.ber;
        m.oa += r.oa;
        m.f_beta += r.f_beta;
    }
    const double n = static_cast<double>(reports.size());
    m.s_alpha /= n;
    m.e_phi /= n;
    m.f_beta_w /= n;
    m.mae /= n;
    m.iou /= n;
    m.ber /= n;
    m.oa /= n;
    m.f_beta /= n;
    return m;
}

std::string to_json_line(const std::string& id, const MetricsReport& r) {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["s_alpha"] = r.s_alpha;
    j["e_phi"] = r.e_phi;
    j["f_beta_w"] = r.f_beta_w;
    j["mae"] = r.mae;
    j["iou"] = r.iou;
    j["ber"] = r.ber;
    j["oa"] = r.oa;
    j["f_beta"] = r.f_beta;
    return j.dump();
}

}  // namespace polarcod
