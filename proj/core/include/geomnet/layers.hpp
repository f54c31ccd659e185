#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "geomnet/tensor.hpp"

namespace geomnet {

// ---------------------------------------------------------------- conv2d

struct ConvParams {
    Tensor weights;   // [out_ch, in_ch, kh, kw]
    Tensor bias;      // [out_ch]
    int stride = 1;
    int padding = 0;  // symmetric zero padding
};

enum class ConvPath { naive, im2col };

// Everything backward needs, copied at forward time so the cache stays a
// self-contained value.
struct ConvCache {
    Tensor input_padded;  // [N, Cin, H+2p, W+2p]
    Tensor weights;
    Shape in_shape;
    int stride = 1;
    int padding = 0;
};

struct ConvGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

std::int64_t conv_out_dim(std::int64_t in, std::int64_t kernel, int stride, int padding);

// out[n][o][i][j] = sum_{c,a,b} in_pad[n][c][i*s+a][j*s+b] * w[o][c][a][b] + bias[o].
// The naive path runs the window sum directly; the im2col path unfolds
// patches into a column matrix and multiplies. Both accumulate in the same
// (c,a,b) order, so their outputs match bit for bit.
std::pair<Tensor, ConvCache> conv2d_forward(const Tensor& input, const ConvParams& params,
                                            ConvPath path = ConvPath::naive);

Tensor conv2d_forward_im2col(const Tensor& input, const ConvParams& params);

ConvGrads conv2d_backward(const Tensor& grad_out, const ConvCache& cache);

// -------------------------------------------------------------- maxpool2

// Non-overlapping 2x2 max pooling; halves both spatial dims.
struct PoolContext {
    std::vector<std::int64_t> argmax;  // winning input flat index per output element
    Shape in_shape;
    Shape out_shape;
};

std::pair<Tensor, PoolContext> maxpool2_forward(const Tensor& input);
Tensor maxpool2_backward(const Tensor& grad_out, const PoolContext& ctx);

// ----------------------------------------------------------------- dense

struct DenseParams {
    Tensor weights;  // [out_features, in_features]
    Tensor bias;     // [out_features]
};

struct DenseCache {
    Tensor input;
    Tensor weights;
};

struct DenseGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

// out = input * weights^T + bias (bias broadcast over rows).
std::pair<Tensor, DenseCache> dense_forward(const Tensor& input, const DenseParams& params);
DenseGrads dense_backward(const Tensor& grad_out, const DenseCache& cache);

// ------------------------------------------------------------ activation

enum class Activation { relu, tanh };

struct ActCache {
    Activation kind = Activation::relu;
    Tensor saved;  // input for relu, output for tanh
};

std::pair<Tensor, ActCache> activation_forward(const Tensor& input, Activation kind);
Tensor activation_backward(const Tensor& grad_out, const ActCache& cache);

// ------------------------------------------------------------------ softmax

// Row-wise softmax on [N,K] with max subtraction; each row sums to 1.
Tensor softmax(const Tensor& logits);

}  // namespace geomnet
