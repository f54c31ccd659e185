#include "geomnet/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "geomnet/layers.hpp"

namespace geomnet {

double binary_cross_entropy(const Tensor& predictions, const Tensor& targets) {
    if (predictions.shape().rank() != 1 || targets.shape().rank() != 1 ||
        predictions.shape() != targets.shape()) {
        throw ShapeError("binary_cross_entropy needs matching rank-1 tensors, got " +
                         predictions.shape().str() + " and " + targets.shape().str());
    }
    const std::int64_t n = predictions.size();
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double y = targets[i];
        if (y != 0.0 && y != 1.0) {
            throw DomainError("binary_cross_entropy label must be 0 or 1, got " +
                              std::to_string(y) + " at index " + std::to_string(i));
        }
        const double a = std::clamp(predictions[i], kProbEps, 1.0 - kProbEps);
        acc += y * std::log(a) + (1.0 - y) * std::log(1.0 - a);
    }
    return -acc / static_cast<double>(n);
}

LossValue softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
    if (logits.shape().rank() != 2) {
        throw ShapeError("softmax_cross_entropy logits must be [N,K], got " +
                         logits.shape().str());
    }
    const std::int64_t n = logits.shape().dim(0);
    const std::int64_t k = logits.shape().dim(1);
    if (static_cast<std::int64_t>(labels.size()) != n) {
        throw ShapeError("softmax_cross_entropy got " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(n) + " rows");
    }
    for (std::int64_t i = 0; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] < 0 ||
            labels[static_cast<std::size_t>(i)] >= k) {
            throw DomainError("label " + std::to_string(labels[static_cast<std::size_t>(i)]) +
                              " out of range [0," + std::to_string(k) + ") at row " +
                              std::to_string(i));
        }
    }

    LossValue out;
    Tensor probs = softmax(logits);
    out.grad_logits = Tensor(logits.shape());
    double acc = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::int64_t i = 0; i < n; ++i) {
        const int label = labels[static_cast<std::size_t>(i)];
        acc += std::log(std::max(probs[i * k + label], kProbEps));
        for (std::int64_t j = 0; j < k; ++j) {
            const double onehot = (j == label) ? 1.0 : 0.0;
            out.grad_logits[i * k + j] = (probs[i * k + j] - onehot) * inv_n;
        }
    }
    out.mean_loss = -acc * inv_n;
    return out;
}

}  // namespace geomnet
