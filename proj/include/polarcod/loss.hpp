#pragma once

#include <vector>

#include "polarcod/tensor.hpp"

namespace polarcod {

// 1 + 5 |avgpool31(gt) - gt|, stride 1, zero padding 15 counted in the average.
Tensor boundary_weight(const Tensor& gt);

// Weighted BCE plus weighted soft IoU per image, averaged over the batch.
// gt must be strictly binary; logits and gt are (N, 1, H, W).
Tensor structure_loss(const Tensor& logits, const Tensor& gt);

// Structure loss of each prediction in order, then of the coarse prediction.
// Throws ConfigError when preds.size() differs from expected_iterations.
std::vector<Tensor> loss_terms(const std::vector<Tensor>& preds, const Tensor& coarse, const Tensor& gt,
                               int expected_iterations);

// Sum of the structure loss over every iteration's prediction plus the coarse prediction.
// Throws ConfigError when preds.size() differs from expected_iterations.
Tensor total_loss(const std::vector<Tensor>& preds, const Tensor& coarse, const Tensor& gt, int expected_iterations);

}  // namespace polarcod
