#pragma once

#include <string>
#include <vector>

#include "polarcod/plane.hpp"

namespace polarcod {

struct MetricsReport {
    double s_alpha = 0.0;   // structure measure, alpha = 0.5
    double e_phi = 0.0;     // enhanced alignment measure
    double f_beta_w = 0.0;  // weighted F-measure, beta^2 = 1
    double mae = 0.0;
    double iou = 0.0;     // at threshold 0.5
    double ber = 0.0;     // balanced error rate in percent, at threshold 0.5
    double oa = 0.0;      // overall accuracy, at threshold 0.5
    double f_beta = 0.0;  // F-measure with beta^2 = 0.3, at threshold 0.5
};

// pred in [0, 1], gt binary, same shape. Throws DataError / DimensionError.
MetricsReport evaluate(const Plane& pred, const Plane& gt);

// Arithmetic mean of each field, in input order.
MetricsReport mean_report(const std::vector<MetricsReport>& reports);

namespace metrics {

double mae(const Plane& pred, const Plane& gt);
// Degenerate masks: all-background gives 1 - mean(pred), all-foreground mean(pred).
double s_alpha(const Plane& pred, const Plane& gt);
// Mean of ((align + 1)^2 / 4) over all pixels, with the mean-centered
// alignment 2 dp dg / (dp^2 + dg^2). Degenerate masks use 1 - pred or pred.
double e_phi(const Plane& pred, const Plane& gt);
// Distance-weighted F-measure. 0 when gt has no foreground.
double f_beta_w(const Plane& pred, const Plane& gt);

struct BinaryCounts {
    double tp = 0, fp = 0, tn = 0, fn = 0;
};
BinaryCounts binary_counts(const Plane& pred, const Plane& gt, double threshold = 0.5);

}  // namespace metrics

// Line-delimited record, one JSON object per call.
std::string to_json_line(const std::string& id, const MetricsReport& r);

}  // namespace polarcod
