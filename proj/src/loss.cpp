#include "polarcod/loss.hpp"

#include <cmath>

#include "polarcod/error.hpp"
#include "polarcod/ops.hpp"

namespace polarcod {

namespace {

void require_binary(const Tensor& gt) {
    for (double v : gt.data()) {
        if (v != 0.0 && v != 1.0) throw DataError("ground truth must be binary, found " + std::to_string(v));
    }
}

}  // namespace

Tensor boundary_weight(const Tensor& gt) {
    NoGradGuard ng;
    Tensor pooled = ops::avg_pool2d(gt.detach(), 31, 1, 15);
    std::vector<double> w(gt.numel());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 + 5.0 * std::abs(pooled.data()[i] - gt.data()[i]);
    return Tensor::from(gt.shape(), std::move(w));
}

Tensor structure_loss(const Tensor& logits, const Tensor& gt) {
    if (!(logits.shape() == gt.shape())) {
        throw DimensionError("structure_loss: logits " + logits.shape().str() + " vs gt " + gt.shape().str());
    }
    require_binary(gt);
    const Tensor target = gt.detach();
    const Tensor w = boundary_weight(target);
    Tensor wbce = ops::div(ops::sum_chw(ops::mul(w, ops::bce_with_logits(logits, target))), ops::sum_chw(w));
    Tensor p = ops::sigmoid(logits);
    Tensor inter = ops::sum_chw(ops::mul(w, ops::mul(p, target)));
    Tensor uni = ops::sum_chw(ops::mul(w, ops::sub(ops::add(p, target), ops::mul(p, target))));
    Tensor wiou = ops::sub(Tensor::full(inter.shape(), 1.0), ops::div(ops::add_scalar(inter, 1.0), ops::add_scalar(uni, 1.0)));
    return ops::mean(ops::add(wbce, wiou));
}

std::vector<Tensor> loss_terms(const std::vector<Tensor>& preds, const Tensor& coarse, const Tensor& gt,
                               int expected_iterations) {
    if (expected_iterations < 1) throw ConfigError("total_loss: iteration count must be at least 1");
    if (static_cast<int>(preds.size()) != expected_iterations) {
        throw ConfigError("total_loss: expected " + std::to_string(expected_iterations) + " predictions, got " +
                          std::to_string(preds.size()));
    }
    std::vector<Tensor> terms;
    for (const auto& p : preds) terms.push_back(structure_loss(p, gt));
    terms.push_back(structure_loss(coarse, gt));
    return terms;
}

Tensor total_loss(const std::vector<Tensor>& preds, const Tensor& coarse, const Tensor& gt, int expected_iterations) {
    auto terms = loss_terms(preds, coarse, gt, expected_iterations);
    Tensor total = terms.front();
    for (std::size_t t = 1; t < terms.size(); ++t) total = ops::add(total, terms[t]);
    return total;
}

}  // namespace polarcod
