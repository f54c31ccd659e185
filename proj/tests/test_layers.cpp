#include <doctest.h>

#include <chrono>
#include <cmath>
#include <iostream>

#include "geomnet/layers.hpp"

using namespace geomnet;

namespace {

ConvParams identity_1x1_kernel() {
    ConvParams p;
    p.weights = tensor_filled(Shape{1, 1, 1, 1}, 1.0);
    p.bias = tensor_filled(Shape{1}, 0.0);
    return p;
}

ConvParams random_conv(std::int64_t cout, std::int64_t cin, std::int64_t k, int stride, int pad,
                       Rng& rng) {
    ConvParams p;
    p.weights = tensor_uniform(Shape{cout, cin, k, k}, -1.0, 1.0, rng);
    p.bias = tensor_uniform(Shape{cout}, -1.0, 1.0, rng);
    p.stride = stride;
    p.padding = pad;
    return p;
}

}  // namespace

TEST_CASE("conv2d identity kernel returns the input") {
    Rng rng(21);
    const Tensor x = tensor_uniform(Shape{1, 1, 3, 3}, -1.0, 1.0, rng);
    auto [out, cache] = conv2d_forward(x, identity_1x1_kernel());
    CHECK(out == x);

    // adjoint of the identity: grad_input equals grad_out
    const Tensor g = tensor_uniform(out.shape(), -1.0, 1.0, rng);
    const ConvGrads grads = conv2d_backward(g, cache);
    CHECK(grads.input == g);
}

TEST_CASE("conv2d window sum of ones") {
    const Tensor x = tensor_filled(Shape{1, 1, 3, 3}, 1.0);
    ConvParams p;
    p.weights = tensor_filled(Shape{1, 1, 2, 2}, 1.0);
    p.bias = tensor_filled(Shape{1}, 0.0);
    auto [out, cache] = conv2d_forward(x, p);
    CHECK(out.shape() == Shape{1, 1, 2, 2});
    for (std::int64_t i = 0; i < out.size(); ++i) CHECK(out[i] == 4.0);
}

TEST_CASE("conv2d C1 configuration: 1x1x32x32 with six 5x5 kernels") {
    Rng rng(22);
    const Tensor x = tensor_uniform(Shape{1, 1, 32, 32}, 0.0, 1.0, rng);
    const ConvParams p = random_conv(6, 1, 5, 1, 0, rng);
    auto [out, cache] = conv2d_forward(x, p);
    CHECK(out.shape() == Shape{1, 6, 28, 28});
}

TEST_CASE("conv2d kernel larger than padded input") {
    Rng rng(23);
    const Tensor x = tensor_uniform(Shape{1, 1, 3, 3}, 0.0, 1.0, rng);
    CHECK_THROWS_AS(conv2d_forward(x, random_conv(1, 1, 5, 1, 0, rng)), ShapeError);
    // padding can make the same kernel fit
    CHECK_NOTHROW(conv2d_forward(x, random_conv(1, 1, 5, 1, 1, rng)));
}

TEST_CASE("conv2d output shape formula over random configurations") {
    Rng rng(24);
    for (int trial = 0; trial < 50; ++trial) {
        const std::int64_t h = 1 + rng.uniform_int(12);
        const std::int64_t w = 1 + rng.uniform_int(12);
        const int pad = static_cast<int>(rng.uniform_int(3));
        const int stride = 1 + static_cast<int>(rng.uniform_int(2));
        const std::int64_t kmax = std::min<std::int64_t>(5, std::min(h, w) + 2 * pad);
        const std::int64_t k = 1 + rng.uniform_int(kmax);
        const Tensor x = tensor_uniform(Shape{1, 2, h, w}, -1.0, 1.0, rng);
        auto [out, cache] = conv2d_forward(x, random_conv(3, 2, k, stride, pad, rng));
        CHECK(out.shape().dim(2) == (h + 2 * pad - k) / stride + 1);
        CHECK(out.shape().dim(3) == (w + 2 * pad - k) / stride + 1);
    }
}

TEST_CASE("conv2d backward zeros and bias sum") {
    Rng rng(25);
    const Tensor x = tensor_uniform(Shape{2, 2, 5, 5}, -1.0, 1.0, rng);
    const ConvParams p = random_conv(3, 2, 3, 1, 1, rng);
    auto [out, cache] = conv2d_forward(x, p);

    const ConvGrads zero = conv2d_backward(tensor_filled(out.shape(), 0.0), cache);
    for (std::int64_t i = 0; i < zero.input.size(); ++i) CHECK(zero.input[i] == 0.0);
    for (std::int64_t i = 0; i < zero.weights.size(); ++i) CHECK(zero.weights[i] == 0.0);
    for (std::int64_t i = 0; i < zero.bias.size(); ++i) CHECK(zero.bias[i] == 0.0);

    const Tensor g = tensor_uniform(out.shape(), -1.0, 1.0, rng);
    const ConvGrads grads = conv2d_backward(g, cache);
    // grad_bias[o] must be the plain sum of grad_out over that channel
    const std::int64_t ho = out.shape().dim(2), wo = out.shape().dim(3);
    for (std::int64_t o = 0; o < 3; ++o) {
        double expected = 0.0;
        for (std::int64_t n = 0; n < 2; ++n)
            for (std::int64_t i = 0; i < ho; ++i)
                for (std::int64_t j = 0; j < wo; ++j) expected += g.at(n, o, i, j);
        CHECK(grads.bias[o] == doctest::Approx(expected).epsilon(1e-12));
    }

    CHECK_THROWS_AS(conv2d_backward(tensor_filled(Shape{2, 3, 1, 1}, 0.0), cache), ShapeError);
}

TEST_CASE("conv2d gradients match central finite differences") {
    // random 1x2x6x6 input, 3 kernels 3x3; directional derivatives, eps 1e-6
    Rng rng(26);
    const Tensor x = tensor_uniform(Shape{1, 2, 6, 6}, -1.0, 1.0, rng);
    const ConvParams p = random_conv(3, 2, 3, 1, 0, rng);
    auto [out, cache] = conv2d_forward(x, p);
    const Tensor u = tensor_uniform(out.shape(), -1.0, 1.0, rng);
    const ConvGrads grads = conv2d_backward(u, cache);
    const double eps = 1e-6;

    for (int trial = 0; trial < 5; ++trial) {
        const Tensor v = tensor_uniform(x.shape(), -1.0, 1.0, rng);
        const double analytic = dot(grads.input, v);
        const double up = dot(u, conv2d_forward(add(x, scale(v, eps)), p).first);
        const double down = dot(u, conv2d_forward(add(x, scale(v, -eps)), p).first);
        const double fd = (up - down) / (2 * eps);
        CHECK(std::abs(analytic - fd) <= 1e-5 * std::max({std::abs(analytic), std::abs(fd), 1e-8}));
    }
    for (int trial = 0; trial < 5; ++trial) {
        const Tensor v = tensor_uniform(p.weights.shape(), -1.0, 1.0, rng);
        const double analytic = dot(grads.weights, v);
        ConvParams up_p = p, down_p = p;
        up_p.weights = add(p.weights, scale(v, eps));
        down_p.weights = add(p.weights, scale(v, -eps));
        const double fd = (dot(u, conv2d_forward(x, up_p).first) -
                           dot(u, conv2d_forward(x, down_p).first)) /
                          (2 * eps);
        CHECK(std::abs(analytic - fd) <= 1e-5 * std::max({std::abs(analytic), std::abs(fd), 1e-8}));
    }
}

TEST_CASE("im2col path equals the naive path") {
    Rng rng(27);

    // the named example configs
    {
        const Tensor x = tensor_uniform(Shape{1, 1, 3, 3}, -1.0, 1.0, rng);
        CHECK(conv2d_forward_im2col(x, identity_1x1_kernel()) ==
              conv2d_forward(x, identity_1x1_kernel()).first);
    }

    // 100 random configurations; contract allows 1e-12, identical summation
    // order should make the paths agree exactly
    double max_abs_diff = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::int64_t n = 1 + rng.uniform_int(2);
        const std::int64_t cin = 1 + rng.uniform_int(3);
        const std::int64_t h = 1 + rng.uniform_int(10);
        const std::int64_t w = 1 + rng.uniform_int(10);
        const int stride = 1 + static_cast<int>(rng.uniform_int(2));
        const int pad = static_cast<int>(rng.uniform_int(3));
        const std::int64_t kmax = std::min<std::int64_t>(5, std::min(h, w) + 2 * pad);
        const std::int64_t k = 1 + rng.uniform_int(kmax);
        const std::int64_t cout = 1 + rng.uniform_int(4);

        const Tensor x = tensor_uniform(Shape{n, cin, h, w}, -1.0, 1.0, rng);
        const ConvParams p = random_conv(cout, cin, k, stride, pad, rng);
        const Tensor naive = conv2d_forward(x, p, ConvPath::naive).first;
        const Tensor cols = conv2d_forward_im2col(x, p);
        REQUIRE(naive.shape() == cols.shape());
        for (std::int64_t i = 0; i < naive.size(); ++i) {
            max_abs_diff = std::max(max_abs_diff, std::abs(naive[i] - cols[i]));
        }
    }
    CHECK(max_abs_diff <= 1e-12);

    // C1-config timing, report only
    const Tensor x = tensor_uniform(Shape{8, 1, 28, 28}, 0.0, 1.0, rng);
    const ConvParams p = random_conv(6, 1, 5, 1, 2, rng);
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 10; ++i) conv2d_forward(x, p, ConvPath::naive);
    const auto t1 = std::chrono::steady_clock::now();
    for (int i = 0; i < 10; ++i) conv2d_forward_im2col(x, p);
    const auto t2 = std::chrono::steady_clock::now();
    const double naive_ms = std::chrono::duration<double, std::milli>(t1 - t0).count() / 10;
    const double im2col_ms = std::chrono::duration<double, std::milli>(t2 - t1).count() / 10;
    std::cout << "[timing] C1 batch-8 forward: naive " << naive_ms << " ms, im2col " << im2col_ms
              << " ms\n";
}

TEST_CASE("maxpool2 forward") {
    Tensor x(Shape{1, 1, 2, 2});
    x[0] = 1; x[1] = 2; x[2] = 3; x[3] = 4;
    auto [out, ctx] = maxpool2_forward(x);
    CHECK(out.shape() == Shape{1, 1, 1, 1});
    CHECK(out[0] == 4.0);
    CHECK(ctx.argmax[0] == 3);

    const Tensor c = tensor_filled(Shape{2, 3, 4, 6}, 2.5);
    auto [cout_t, cctx] = maxpool2_forward(c);
    CHECK(cout_t.shape() == Shape{2, 3, 2, 3});
    for (std::int64_t i = 0; i < cout_t.size(); ++i) CHECK(cout_t[i] == 2.5);

    Tensor iota(Shape{1, 1, 4, 4});
    for (std::int64_t i = 0; i < 16; ++i) iota[i] = static_cast<double>(i);
    auto [iout, ictx] = maxpool2_forward(iota);
    CHECK(iout.at(0, 0, 0, 0) == 5.0);
    CHECK(iout.at(0, 0, 0, 1) == 7.0);
    CHECK(iout.at(0, 0, 1, 0) == 13.0);
    CHECK(iout.at(0, 0, 1, 1) == 15.0);

    CHECK_THROWS_AS(maxpool2_forward(tensor_filled(Shape{1, 1, 3, 4}, 0.0)), ShapeError);
    CHECK_THROWS_AS(maxpool2_forward(tensor_filled(Shape{1, 1, 4, 5}, 0.0)), ShapeError);
}

TEST_CASE("maxpool2 ties pick the lowest flat index") {
    const Tensor x = tensor_filled(Shape{1, 1, 2, 2}, 7.0);
    auto [out, ctx] = maxpool2_forward(x);
    CHECK(ctx.argmax[0] == 0);

    Tensor g(Shape{1, 1, 1, 1});
    g[0] = 3.5;
    const Tensor gi = maxpool2_backward(g, ctx);
    CHECK(gi[0] == 3.5);
    CHECK(gi[1] == 0.0);
    CHECK(gi[2] == 0.0);
    CHECK(gi[3] == 0.0);
}

TEST_CASE("maxpool2 backward routing and conservation") {
    Rng rng(28);
    auto [out0, ctx0] = maxpool2_forward(tensor_uniform(Shape{1, 2, 4, 4}, -1.0, 1.0, rng));
    const Tensor zeros = maxpool2_backward(tensor_filled(out0.shape(), 0.0), ctx0);
    for (std::int64_t i = 0; i < zeros.size(); ++i) CHECK(zeros[i] == 0.0);

    for (int trial = 0; trial < 20; ++trial) {
        const Tensor x = tensor_uniform(Shape{2, 3, 4, 6}, -1.0, 1.0, rng);
        auto [out, ctx] = maxpool2_forward(x);
        const Tensor g = tensor_uniform(out.shape(), -1.0, 1.0, rng);
        const Tensor gi = maxpool2_backward(g, ctx);
        double sum_in = 0.0, sum_out = 0.0;
        for (std::int64_t i = 0; i < gi.size(); ++i) sum_in += gi[i];
        for (std::int64_t i = 0; i < g.size(); ++i) sum_out += g[i];
        CHECK(std::abs(sum_in - sum_out) <= 1e-12);
    }

    CHECK_THROWS_AS(maxpool2_backward(tensor_filled(Shape{1, 1, 2, 2}, 0.0), ctx0), ShapeError);
}

TEST_CASE("dense forward") {
    // identity weights, zero bias
    Rng rng(29);
    const Tensor x = tensor_uniform(Shape{3, 4}, -1.0, 1.0, rng);
    DenseParams id;
    id.weights = Tensor(Shape{4, 4});
    for (std::int64_t i = 0; i < 4; ++i) id.weights.at(i, i) = 1.0;
    id.bias = Tensor(Shape{4});
    CHECK(dense_forward(x, id).first == x);

    // [[1,2]] x [[1,0],[0,1],[1,1]] + [0,0,1] = [[1,2,4]]
    Tensor in(Shape{1, 2});
    in[0] = 1; in[1] = 2;
    DenseParams p;
    p.weights = Tensor(Shape{3, 2});
    p.weights.at(0, 0) = 1; p.weights.at(0, 1) = 0;
    p.weights.at(1, 0) = 0; p.weights.at(1, 1) = 1;
    p.weights.at(2, 0) = 1; p.weights.at(2, 1) = 1;
    p.bias = Tensor(Shape{3});
    p.bias[2] = 1.0;
    const Tensor out = dense_forward(in, p).first;
    CHECK(out.shape() == Shape{1, 3});
    CHECK(out[0] == 1.0);
    CHECK(out[1] == 2.0);
    CHECK(out[2] == 4.0);

    CHECK_THROWS_AS(dense_forward(tensor_filled(Shape{1, 3}, 0.0), p), ShapeError);
}

TEST_CASE("dense gradients match central finite differences") {
    Rng rng(30);
    const Tensor x = tensor_uniform(Shape{3, 4}, -1.0, 1.0, rng);
    DenseParams p;
    p.weights = tensor_uniform(Shape{2, 4}, -1.0, 1.0, rng);
    p.bias = tensor_uniform(Shape{2}, -1.0, 1.0, rng);
    auto [out, cache] = dense_forward(x, p);
    const Tensor u = tensor_uniform(out.shape(), -1.0, 1.0, rng);
    const DenseGrads grads = dense_backward(u, cache);
    const double eps = 1e-6;

    const Tensor vx = tensor_uniform(x.shape(), -1.0, 1.0, rng);
    const double fd_x = (dot(u, dense_forward(add(x, scale(vx, eps)), p).first) -
                         dot(u, dense_forward(add(x, scale(vx, -eps)), p).first)) /
                        (2 * eps);
    CHECK(dot(grads.input, vx) == doctest::Approx(fd_x).epsilon(1e-5));

    const Tensor vw = tensor_uniform(p.weights.shape(), -1.0, 1.0, rng);
    DenseParams pu = p, pd = p;
    pu.weights = add(p.weights, scale(vw, eps));
    pd.weights = add(p.weights, scale(vw, -eps));
    const double fd_w =
        (dot(u, dense_forward(x, pu).first) - dot(u, dense_forward(x, pd).first)) / (2 * eps);
    CHECK(dot(grads.weights, vw) == doctest::Approx(fd_w).epsilon(1e-5));

    // grad_bias = column sums of grad_out
    for (std::int64_t j = 0; j < 2; ++j) {
        double expected = 0.0;
        for (std::int64_t i = 0; i < 3; ++i) expected += u.at(i, j);
        CHECK(grads.bias[j] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("activations") {
    Tensor x(Shape{3});
    x[0] = -1; x[1] = 0; x[2] = 2;
    auto [r, rcache] = activation_forward(x, Activation::relu);
    CHECK(r[0] == 0.0);
    CHECK(r[1] == 0.0);
    CHECK(r[2] == 2.0);

    // relu'(0) == 0
    const Tensor ones = tensor_filled(Shape{3}, 1.0);
    const Tensor rg = activation_backward(ones, rcache);
    CHECK(rg[0] == 0.0);
    CHECK(rg[1] == 0.0);
    CHECK(rg[2] == 1.0);

    auto [t, tcache] = activation_forward(tensor_filled(Shape{1}, 0.0), Activation::tanh);
    CHECK(t[0] == 0.0);
    CHECK(activation_backward(tensor_filled(Shape{1}, 1.0), tcache)[0] == 1.0);
}

TEST_CASE("activation gradients match finite differences away from kinks") {
    Rng rng(31);
    for (const auto kind : {Activation::relu, Activation::tanh}) {
        Tensor x = tensor_uniform(Shape{2, 6}, -1.0, 1.0, rng);
        for (auto& v : x.values()) v += v >= 0 ? 1e-3 : -1e-3;  // clear the relu kink
        auto [out, cache] = activation_forward(x, kind);
        const Tensor u = tensor_uniform(out.shape(), -1.0, 1.0, rng);
        const Tensor grad = activation_backward(u, cache);
        const double eps = 1e-6;
        const Tensor v = tensor_uniform(x.shape(), -1.0, 1.0, rng);
        const double fd = (dot(u, activation_forward(add(x, scale(v, eps)), kind).first) -
                           dot(u, activation_forward(add(x, scale(v, -eps)), kind).first)) /
                          (2 * eps);
        CHECK(dot(grad, v) == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("softmax") {
    Tensor z(Shape{1, 3});
    const Tensor uniform = softmax(z);
    for (std::int64_t i = 0; i < 3; ++i) {
        CHECK(uniform[i] == doctest::Approx(1.0 / 3).epsilon(1e-12));
    }

    z[0] = 1; z[1] = 2; z[2] = 3;
    const Tensor p = softmax(z);
    CHECK(p[0] == doctest::Approx(0.09003057317038046).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.24472847105479764).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(0.66524095577482178).epsilon(1e-12));

    // shift invariance, normalization, argmax preservation, overflow safety
    Rng rng(32);
    for (int trial = 0; trial < 30; ++trial) {
        const std::int64_t n = 1 + rng.uniform_int(4);
        const std::int64_t k = 2 + rng.uniform_int(5);
        const Tensor logits = tensor_uniform(Shape{n, k}, -700.0, 700.0, rng);
        const Tensor probs = softmax(logits);
        const double c = rng.uniform(-100.0, 100.0);
        Tensor shifted(logits.shape());
        for (std::int64_t i = 0; i < logits.size(); ++i) shifted[i] = logits[i] + c;
        const Tensor probs_shifted = softmax(shifted);

        for (std::int64_t i = 0; i < n; ++i) {
            double sum = 0.0;
            std::int64_t arg_logit = 0, arg_prob = 0;
            for (std::int64_t j = 0; j < k; ++j) {
                sum += probs[i * k + j];
                CHECK(std::isfinite(probs[i * k + j]));
                CHECK(std::abs(probs[i * k + j] - probs_shifted[i * k + j]) <= 1e-12);
                if (logits[i * k + j] > logits[i * k + arg_logit]) arg_logit = j;
                if (probs[i * k + j] > probs[i * k + arg_prob]) arg_prob = j;
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
            CHECK(arg_logit == arg_prob);
        }
    }
}
