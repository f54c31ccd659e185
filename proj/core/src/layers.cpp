#include "geomnet/layers.hpp"

#include <algorithm>
#include <cmath>

namespace geomnet {

namespace {

struct ConvDims {
    std::int64_t n, cin, h, w;        // input
    std::int64_t cout, kh, kw;        // kernel
    std::int64_t hp, wp;              // padded input
    std::int64_t ho, wo;              // output
    int stride, padding;
};

ConvDims conv_dims(const Shape& input, const ConvParams& params) {
    if (input.rank() != 4) {
        throw ShapeError("conv2d input must be [N,C,H,W], got " + input.str());
    }
    if (params.weights.shape().rank() != 4) {
        throw ShapeError("conv2d weights must be [out,in,kh,kw], got " +
                         params.weights.shape().str());
    }
    if (params.stride < 1) throw ShapeError("conv2d stride must be >= 1");
    if (params.padding < 0) throw ShapeError("conv2d padding must be >= 0");

    ConvDims d{};
    d.n = input.dim(0);
    d.cin = input.dim(1);
    d.h = input.dim(2);
    d.w = input.dim(3);
    d.cout = params.weights.shape().dim(0);
    d.kh = params.weights.shape().dim(2);
    d.kw = params.weights.shape().dim(3);
    d.stride = params.stride;
    d.padding = params.padding;
    if (params.weights.shape().dim(1) != d.cin) {
        throw ShapeError("conv2d channel mismatch: input " + input.str() + ", weights " +
                         params.weights.shape().str());
    }
    if (params.bias.shape() != Shape{d.cout}) {
        throw ShapeError("conv2d bias must be [out_ch], got " + params.bias.shape().str());
    }
    d.hp = d.h + 2 * d.padding;
    d.wp = d.w + 2 * d.padding;
    if (d.hp < d.kh || d.wp < d.kw) {
        throw ShapeError("conv2d kernel " + params.weights.shape().str() +
                         " larger than padded input " + input.str() + " with padding " +
                         std::to_string(d.padding));
    }
    d.ho = conv_out_dim(d.h, d.kh, d.stride, d.padding);
    d.wo = conv_out_dim(d.w, d.kw, d.stride, d.padding);
    return d;
}

Tensor pad_input(const Tensor& input, const ConvDims& d) {
    if (d.padding == 0) return input;
    Tensor out(Shape{d.n, d.cin, d.hp, d.wp});
    const double* src = input.data();
    double* dst = out.data();
    for (std::int64_t n = 0; n < d.n; ++n) {
        for (std::int64_t c = 0; c < d.cin; ++c) {
            for (std::int64_t i = 0; i < d.h; ++i) {
                const double* srow = src + ((n * d.cin + c) * d.h + i) * d.w;
                double* drow = dst + ((n * d.cin + c) * d.hp + i + d.padding) * d.wp + d.padding;
                std::copy(srow, srow + d.w, drow);
            }
        }
    }
    return out;
}

// Column matrix [Cin*kh*kw, N*Ho*Wo]; row index t = (c*kh + a)*kw + b matches
// the row-major weight layout, column index is n*Ho*Wo + i*Wo + j.
Tensor im2col(const Tensor& padded, const ConvDims& d) {
    const std::int64_t t_rows = d.cin * d.kh * d.kw;
    const std::int64_t cols = d.n * d.ho * d.wo;
    Tensor out(Shape{t_rows, cols});
    const double* src = padded.data();
    double* dst = out.data();
    for (std::int64_t c = 0; c < d.cin; ++c) {
        for (std::int64_t a = 0; a < d.kh; ++a) {
            for (std::int64_t b = 0; b < d.kw; ++b) {
                const std::int64_t t = (c * d.kh + a) * d.kw + b;
                double* drow = dst + t * cols;
                for (std::int64_t n = 0; n < d.n; ++n) {
                    const double* plane = src + (n * d.cin + c) * d.hp * d.wp;
                    for (std::int64_t i = 0; i < d.ho; ++i) {
                        const double* srow = plane + (i * d.stride + a) * d.wp + b;
                        double* dcol = drow + (n * d.ho + i) * d.wo;
                        for (std::int64_t j = 0; j < d.wo; ++j)
                            dcol[j] = srow[j * d.stride];
                    }
                }
            }
        }
    }
    return out;
}

Tensor conv_forward_naive(const Tensor& padded, const ConvParams& params, const ConvDims& d) {
    Tensor out(Shape{d.n, d.cout, d.ho, d.wo});
    const double* in = padded.data();
    const double* w = params.weights.data();
    const double* bias = params.bias.data();
    double* dst = out.data();
    for (std::int64_t n = 0; n < d.n; ++n) {
        for (std::int64_t o = 0; o < d.cout; ++o) {
            for (std::int64_t i = 0; i < d.ho; ++i) {
                for (std::int64_t j = 0; j < d.wo; ++j) {
                    double acc = 0.0;
                    for (std::int64_t c = 0; c < d.cin; ++c) {
                        const double* plane = in + (n * d.cin + c) * d.hp * d.wp;
                        const double* wplane = w + (o * d.cin + c) * d.kh * d.kw;
                        for (std::int64_t a = 0; a < d.kh; ++a) {
                            const double* srow = plane + (i * d.stride + a) * d.wp + j * d.stride;
                            const double* wrow = wplane + a * d.kw;
                            for (std::int64_t b = 0; b < d.kw; ++b) acc += srow[b] * wrow[b];
                        }
                    }
                    dst[((n * d.cout + o) * d.ho + i) * d.wo + j] = acc + bias[o];
                }
            }
        }
    }
    return out;
}

Tensor conv_forward_cols(const Tensor& padded, const ConvParams& params, const ConvDims& d) {
    const Tensor cols = im2col(padded, d);
    const Tensor wflat = params.weights.reshaped(Shape{d.cout, d.cin * d.kh * d.kw});
    const Tensor prod = matmul(wflat, cols);  // [Cout, N*Ho*Wo]
    Tensor out(Shape{d.n, d.cout, d.ho, d.wo});
    const double* bias = params.bias.data();
    const double* src = prod.data();
    double* dst = out.data();
    const std::int64_t plane = d.ho * d.wo;
    for (std::int64_t n = 0; n < d.n; ++n) {
        for (std::int64_t o = 0; o < d.cout; ++o) {
            const double* srow = src + o * d.n * plane + n * plane;
            double* drow = dst + (n * d.cout + o) * plane;
            const double b = bias[o];
            for (std::int64_t p = 0; p < plane; ++p) drow[p] = srow[p] + b;
        }
    }
    return out;
}

}  // namespace

std::int64_t conv_out_dim(std::int64_t in, std::int64_t kernel, int stride, int padding) {
    return (in + 2 * padding - kernel) / stride + 1;
}

std::pair<Tensor, ConvCache> conv2d_forward(const Tensor& input, const ConvParams& params,
                                            ConvPath path) {
    const ConvDims d = conv_dims(input.shape(), params);
    Tensor padded = pad_input(input, d);
    Tensor out = path == ConvPath::naive ? conv_forward_naive(padded, params, d)
                                         : conv_forward_cols(padded, params, d);
    ConvCache cache{std::move(padded), params.weights, input.shape(), params.stride,
                    params.padding};
    return {std::move(out), std::move(cache)};
}

Tensor conv2d_forward_im2col(const Tensor& input, const ConvParams& params) {
    const ConvDims d = conv_dims(input.shape(), params);
    return conv_forward_cols(pad_input(input, d), params, d);
}

ConvGrads conv2d_backward(const Tensor& grad_out, const ConvCache& cache) {
    ConvParams params{cache.weights, Tensor(Shape{cache.weights.shape().dim(0)}), cache.stride,
                      cache.padding};
    const ConvDims d = conv_dims(cache.in_shape, params);
    if (grad_out.shape() != Shape{d.n, d.cout, d.ho, d.wo}) {
        throw ShapeError("conv2d_backward: grad_out " + grad_out.shape().str() +
                         " does not match forward output [" + std::to_string(d.n) + "," +
                         std::to_string(d.cout) + "," + std::to_string(d.ho) + "," +
                         std::to_string(d.wo) + "]");
    }

    const double* go = grad_out.data();
    const double* in = cache.input_padded.data();
    const double* w = cache.weights.data();

    Tensor grad_bias(params.bias.shape());
    {
        double* gb = grad_bias.data();
        for (std::int64_t n = 0; n < d.n; ++n)
            for (std::int64_t o = 0; o < d.cout; ++o) {
                const double* plane = go + (n * d.cout + o) * d.ho * d.wo;
                double acc = gb[o];
                for (std::int64_t p = 0; p < d.ho * d.wo; ++p) acc += plane[p];
                gb[o] = acc;
            }
    }

    Tensor grad_weights(cache.weights.shape());
    {
        double* gw = grad_weights.data();
        for (std::int64_t n = 0; n < d.n; ++n) {
            for (std::int64_t o = 0; o < d.cout; ++o) {
                const double* gplane = go + (n * d.cout + o) * d.ho * d.wo;
                for (std::int64_t i = 0; i < d.ho; ++i) {
                    for (std::int64_t j = 0; j < d.wo; ++j) {
                        const double g = gplane[i * d.wo + j];
                        for (std::int64_t c = 0; c < d.cin; ++c) {
                            const double* srow =
                                in + ((n * d.cin + c) * d.hp + i * d.stride) * d.wp + j * d.stride;
                            double* wplane = gw + (o * d.cin + c) * d.kh * d.kw;
                            for (std::int64_t a = 0; a < d.kh; ++a) {
                                const double* sr = srow + a * d.wp;
                                double* wr = wplane + a * d.kw;
                                for (std::int64_t b = 0; b < d.kw; ++b) wr[b] += g * sr[b];
                            }
                        }
                    }
                }
            }
        }
    }

    Tensor grad_padded(Shape{d.n, d.cin, d.hp, d.wp});
    {
        double* gp = grad_padded.data();
        for (std::int64_t n = 0; n < d.n; ++n) {
            for (std::int64_t o = 0; o < d.cout; ++o) {
                const double* gplane = go + (n * d.cout + o) * d.ho * d.wo;
                for (std::int64_t i = 0; i < d.ho; ++i) {
                    for (std::int64_t j = 0; j < d.wo; ++j) {
                        const double g = gplane[i * d.wo + j];
                        for (std::int64_t c = 0; c < d.cin; ++c) {
                            double* drow =
                                gp + ((n * d.cin + c) * d.hp + i * d.stride) * d.wp + j * d.stride;
                            const double* wplane = w + (o * d.cin + c) * d.kh * d.kw;
                            for (std::int64_t a = 0; a < d.kh; ++a) {
                                double* dr = drow + a * d.wp;
                                const double* wr = wplane + a * d.kw;
                                for (std::int64_t b = 0; b < d.kw; ++b) dr[b] += g * wr[b];
                            }
                        }
                    }
                }
            }
        }
    }

    Tensor grad_input(cache.in_shape);
    if (d.padding == 0) {
        grad_input = std::move(grad_padded);
    } else {
        const double* src = grad_padded.data();
        double* dst = grad_input.data();
        for (std::int64_t n = 0; n < d.n; ++n)
            for (std::int64_t c = 0; c < d.cin; ++c)
                for (std::int64_t i = 0; i < d.h; ++i) {
                    const double* srow =
                        src + ((n * d.cin + c) * d.hp + i + d.padding) * d.wp + d.padding;
                    double* drow = dst + ((n * d.cin + c) * d.h + i) * d.w;
                    std::copy(srow, srow + d.w, drow);
                }
    }

    return {std::move(grad_input), std::move(grad_weights), std::move(grad_bias)};
}

std::pair<Tensor, PoolContext> maxpool2_forward(const Tensor& input) {
    if (input.shape().rank() != 4) {
        throw ShapeError("maxpool2 input must be [N,C,H,W], got " + input.shape().str());
    }
    const std::int64_t n = input.shape().dim(0), c = input.shape().dim(1);
    const std::int64_t h = input.shape().dim(2), w = input.shape().dim(3);
    if (h % 2 != 0 || w % 2 != 0) {
        throw ShapeError("maxpool2 needs even H and W, got " + input.shape().str());
    }
    const std::int64_t ho = h / 2, wo = w / 2;
    Tensor out(Shape{n, c, ho, wo});
    PoolContext ctx;
    ctx.in_shape = input.shape();
    ctx.out_shape = out.shape();
    ctx.argmax.resize(static_cast<std::size_t>(out.size()));

    const double* src = input.data();
    double* dst = out.data();
    std::int64_t k = 0;
    for (std::int64_t nn = 0; nn < n; ++nn) {
        for (std::int64_t cc = 0; cc < c; ++cc) {
            const std::int64_t base = (nn * c + cc) * h * w;
            for (std::int64_t i = 0; i < ho; ++i) {
                for (std::int64_t j = 0; j < wo; ++j, ++k) {
                    // scan the window in ascending flat order; ties keep the
                    // first (lowest) index
                    std::int64_t best = base + (2 * i) * w + 2 * j;
                    double best_val = src[best];
                    const std::int64_t cand[3] = {base + (2 * i) * w + 2 * j + 1,
                                                  base + (2 * i + 1) * w + 2 * j,
                                                  base + (2 * i + 1) * w + 2 * j + 1};
                    for (std::int64_t idx : cand) {
                        if (src[idx] > best_val) {
                            best_val = src[idx];
                            best = idx;
                        }
                    }
                    dst[k] = best_val;
                    ctx.argmax[static_cast<std::size_t>(k)] = best;
                }
            }
        }
    }
    return {std::move(out), std::move(ctx)};
}

Tensor maxpool2_backward(const Tensor& grad_out, const PoolContext& ctx) {
    if (grad_out.shape() != ctx.out_shape) {
        throw ShapeError("maxpool2_backward: grad_out " + grad_out.shape().str() +
                         " does not match forward output " + ctx.out_shape.str());
    }
    Tensor grad_input(ctx.in_shape);
    for (std::int64_t k = 0; k < grad_out.size(); ++k) {
        grad_input[ctx.argmax[static_cast<std::size_t>(k)]] += grad_out[k];
    }
    return grad_input;
}

std::pair<Tensor, DenseCache> dense_forward(const Tensor& input, const DenseParams& params) {
    if (input.shape().rank() != 2) {
        throw ShapeError("dense input must be [N,F], got " + input.shape().str());
    }
    if (params.weights.shape().rank() != 2) {
        throw ShapeError("dense weights must be [out,in], got " + params.weights.shape().str());
    }
    const std::int64_t f = input.shape().dim(1);
    const std::int64_t o = params.weights.shape().dim(0);
    if (params.weights.shape().dim(1) != f) {
        throw ShapeError("dense feature mismatch: input " + input.shape().str() + ", weights " +
                         params.weights.shape().str());
    }
    if (params.bias.shape() != Shape{o}) {
        throw ShapeError("dense bias must be [out], got " + params.bias.shape().str());
    }
    Tensor out = matmul(input, transpose(params.weights));
    const std::int64_t rows = out.shape().dim(0);
    for (std::int64_t i = 0; i < rows; ++i)
        for (std::int64_t j = 0; j < o; ++j) out[i * o + j] += params.bias[j];
    return {std::move(out), DenseCache{input, params.weights}};
}

DenseGrads dense_backward(const Tensor& grad_out, const DenseCache& cache) {
    const std::int64_t n = cache.input.shape().dim(0);
    const std::int64_t o = cache.weights.shape().dim(0);
    if (grad_out.shape() != Shape{n, o}) {
        throw ShapeError("dense_backward: grad_out " + grad_out.shape().str() +
                         " does not match forward output [" + std::to_string(n) + "," +
                         std::to_string(o) + "]");
    }
    Tensor grad_input = matmul(grad_out, cache.weights);
    Tensor grad_weights = matmul(transpose(grad_out), cache.input);
    Tensor grad_bias(Shape{o});
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < o; ++j) grad_bias[j] += grad_out[i * o + j];
    return {std::move(grad_input), std::move(grad_weights), std::move(grad_bias)};
}

std::pair<Tensor, ActCache> activation_forward(const Tensor& input, Activation kind) {
    Tensor out(input.shape());
    if (kind == Activation::relu) {
        for (std::int64_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0 ? input[i] : 0.0;
        return {std::move(out), ActCache{kind, input}};
    }
    for (std::int64_t i = 0; i < input.size(); ++i) out[i] = std::tanh(input[i]);
    ActCache cache{kind, out};
    return {std::move(out), std::move(cache)};
}

Tensor activation_backward(const Tensor& grad_out, const ActCache& cache) {
    if (grad_out.shape() != cache.saved.shape()) {
        throw ShapeError("activation_backward: grad_out " + grad_out.shape().str() +
                         " does not match forward shape " + cache.saved.shape().str());
    }
    Tensor grad_input(grad_out.shape());
    if (cache.kind == Activation::relu) {
        // relu'(0) == 0
        for (std::int64_t i = 0; i < grad_out.size(); ++i)
            grad_input[i] = cache.saved[i] > 0.0 ? grad_out[i] : 0.0;
    } else {
        for (std::int64_t i = 0; i < grad_out.size(); ++i) {
            const double y = cache.saved[i];
            grad_input[i] = grad_out[i] * (1.0 - y * y);
        }
    }
    return grad_input;
}

Tensor softmax(const Tensor& logits) {
    if (logits.shape().rank() != 2) {
        throw ShapeError("softmax input must be [N,K], got " + logits.shape().str());
    }
    const std::int64_t n = logits.shape().dim(0), k = logits.shape().dim(1);
    Tensor out(logits.shape());
    for (std::int64_t i = 0; i < n; ++i) {
        const double* row = logits.data() + i * k;
        double* orow = out.data() + i * k;
        double mx = row[0];
        for (std::int64_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::int64_t j = 0; j < k; ++j) {
            orow[j] = std::exp(row[j] - mx);
            sum += orow[j];
        }
        for (std::int64_t j = 0; j < k; ++j) orow[j] /= sum;
    }
    return out;
}

}  // namespace geomnet
