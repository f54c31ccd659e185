#pragma once

#include <cstdint>
#include <span>

#include "geomnet/tensor.hpp"

namespace geomnet {

// Probabilities are clamped to [kProbEps, 1-kProbEps] before any logarithm.
inline constexpr double kProbEps = 1e-12;

// Mean binary cross entropy -(1/n) * sum[y*ln(a) + (1-y)*ln(1-a)].
// y must be exactly 0 or 1; a is clamped before the logs.
double binary_cross_entropy(const Tensor& predictions, const Tensor& targets);

struct LossValue {
    double mean_loss = 0.0;
    Tensor grad_logits;  // [N,K], gradient of mean loss w.r.t. logits
};

// Categorical cross entropy over softmax(logits); grad = (p - onehot)/N.
LossValue softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

}  // namespace geomnet
