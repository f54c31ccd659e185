#include "geomnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "geomnet/loss.hpp"

namespace geomnet {

namespace {

struct Probe {
    std::function<double(double)> loss_at;
    double analytic = 0.0;
};

double central_diff(const std::function<double(double)>& f, double eps) {
    return (f(eps) - f(-eps)) / (2.0 * eps);
}

CheckResult aggregate(const std::string& name, const std::vector<Probe>& probes, double tol) {
    CheckResult result{name, 0.0, true};
    for (const auto& probe : probes) {
        const double fd = central_diff(probe.loss_at, kGradCheckEps);
        result.max_rel_err = std::max(result.max_rel_err, relative_error(probe.analytic, fd));
    }
    result.pass = result.max_rel_err < tol;
    return result;
}

// Push every element at least `margin` away from zero so finite-difference
// probes cannot cross the relu kink.
Tensor away_from_zero(Tensor t, double margin) {
    for (auto& v : t.values()) v += v >= 0.0 ? margin : -margin;
    return t;
}

std::vector<CheckResult> conv_checks(Rng& rng) {
    const Tensor x = away_from_zero(tensor_uniform(Shape{1, 2, 6, 6}, -1.0, 1.0, rng), 1e-3);
    ConvParams params;
    params.weights = tensor_uniform(Shape{3, 2, 3, 3}, -1.0, 1.0, rng);
    params.bias = tensor_uniform(Shape{3}, -1.0, 1.0, rng);

    auto [out, cache] = conv2d_forward(x, params);
    Tensor u = tensor_uniform(out.shape(), -1.0, 1.0, rng);
    const ConvGrads grads = conv2d_backward(u, cache);

    std::vector<CheckResult> results;
    {
        std::vector<Probe> probes;
        for (int k = 0; k < 3; ++k) {
            Tensor v = tensor_uniform(x.shape(), -1.0, 1.0, rng);
            probes.push_back(
                {[=](double t) { return dot(u, conv2d_forward(add(x, scale(v, t)), params).first); },
                 dot(grads.input, v)});
        }
        results.push_back(aggregate("conv2d/grad_input", probes, kGradCheckTol));
    }
    {
        std::vector<Probe> probes;
        for (int k = 0; k < 3; ++k) {
            Tensor v = tensor_uniform(params.weights.shape(), -1.0, 1.0, rng);
            probes.push_back({[=](double t) {
                                  ConvParams p = params;
                                  p.weights = add(p.weights, scale(v, t));
                                  return dot(u, conv2d_forward(x, p).first);
                              },
                              dot(grads.weights, v)});
        }
        results.push_back(aggregate("conv2d/grad_weights", probes, kGradCheckTol));
    }
    {
        std::vector<Probe> probes;
        for (int k = 0; k < 3; ++k) {
            Tensor v = tensor_uniform(params.bias.shape(), -1.0, 1.0, rng);
            probes.push_back({[=](double t) {
                                  ConvParams p = params;
                                  p.bias = add(p.bias, scale(v, t));
                                  return dot(u, conv2d_forward(x, p).first);
                              },
                              dot(grads.bias, v)});
        }
        results.push_back(aggregate("conv2d/grad_bias", probes, kGradCheckTol));
    }
    return results;
}

double min_window_gap(const Tensor& input) {
    const std::int64_t n = input.shape().dim(0), c = input.shape().dim(1);
    const std::int64_t h = input.shape().dim(2), w = input.shape().dim(3);
    double gap = 1e300;
    for (std::int64_t nn = 0; nn < n; ++nn)
        for (std::int64_t cc = 0; cc < c; ++cc)
            for (std::int64_t i = 0; i < h; i += 2)
                for (std::int64_t j = 0; j < w; j += 2) {
                    double best = -1e300, second = -1e300;
                    for (int di = 0; di < 2; ++di)
                        for (int dj = 0; dj < 2; ++dj) {
                            const double v = input.at(nn, cc, i + di, j + dj);
                            if (v > best) {
                                second = best;
                                best = v;
                            } else {
                                second = std::max(second, v);
                            }
                        }
                    gap = std::min(gap, best - second);
                }
    return gap;
}

CheckResult maxpool_check(Rng& rng) {
    Tensor x;
    do {
        x = tensor_uniform(Shape{1, 2, 4, 4}, -1.0, 1.0, rng);
    } while (min_window_gap(x) < 1e-3);
    auto [out, ctx] = maxpool2_forward(x);
    Tensor u = tensor_uniform(out.shape(), -1.0, 1.0, rng);
    const Tensor grad = maxpool2_backward(u, ctx);

    std::vector<Probe> probes;
    for (int k = 0; k < 3; ++k) {
        Tensor v = tensor_uniform(x.shape(), -1.0, 1.0, rng);
        probes.push_back(
            {[=](double t) { return dot(u, maxpool2_forward(add(x, scale(v, t))).first); },
             dot(grad, v)});
    }
    return aggregate("maxpool2/grad_input", probes, kGradCheckTol);
}

std::vector<CheckResult> dense_checks(Rng& rng) {
    const Tensor x = tensor_uniform(Shape{3, 4}, -1.0, 1.0, rng);
    DenseParams params;
    params.weights = tensor_uniform(Shape{2, 4}, -1.0, 1.0, rng);
    params.bias = tensor_uniform(Shape{2}, -1.0, 1.0, rng);

    auto [out, cache] = dense_forward(x, params);
    Tensor u = tensor_uniform(out.shape(), -1.0, 1.0, rng);
    const DenseGrads grads = dense_backward(u, cache);

    std::vector<CheckResult> results;
    {
        std::vector<Probe> probes;
        for (int k = 0; k < 3; ++k) {
            Tensor v = tensor_uniform(x.shape(), -1.0, 1.0, rng);
            probes.push_back(
                {[=](double t) { return dot(u, dense_forward(add(x, scale(v, t)), params).first); },
                 dot(grads.input, v)});
        }
        results.push_back(aggregate("dense/grad_input", probes, kGradCheckTol));
    }
    {
        std::vector<Probe> probes;
        for (int k = 0; k < 3; ++k) {
            Tensor v = tensor_uniform(params.weights.shape(), -1.0, 1.0, rng);
            probes.push_back({[=](double t) {
                                  DenseParams p = params;
                                  p.weights = add(p.weights, scale(v, t));
                                  return dot(u, dense_forward(x, p).first);
                              },
                              dot(grads.weights, v)});
        }
        results.push_back(aggregate("dense/grad_weights", probes, kGradCheckTol));
    }
    {
        std::vector<Probe> probes;
        for (int k = 0; k < 3; ++k) {
            Tensor v = tensor_uniform(params.bias.shape(), -1.0, 1.0, rng);
            probes.push_back({[=](double t) {
                                  DenseParams p = params;
                                  p.bias = add(p.bias, scale(v, t));
                                  return dot(u, dense_forward(x, p).first);
                              },
                              dot(grads.bias, v)});
        }
        results.push_back(aggregate("dense/grad_bias", probes, kGradCheckTol));
    }
    return results;
}

CheckResult activation_check(Activation kind, const std::string& name, Rng& rng) {
    // Stay clear of the relu kink at 0 (|x| < 1e-4 excluded by construction).
    const Tensor x = away_from_zero(tensor_uniform(Shape{2, 5}, -1.0, 1.0, rng), 1e-3);
    auto [out, cache] = activation_forward(x, kind);
    Tensor u = tensor_uniform(out.shape(), -1.0, 1.0, rng);
    const Tensor grad = activation_backward(u, cache);

    std::vector<Probe> probes;
    for (int k = 0; k < 3; ++k) {
        Tensor v = tensor_uniform(x.shape(), -1.0, 1.0, rng);
        probes.push_back(
            {[=, kind = kind](double t) {
                 return dot(u, activation_forward(add(x, scale(v, t)), kind).first);
             },
             dot(grad, v)});
    }
    return aggregate(name, probes, kGradCheckTol);
}

CheckResult softmax_ce_check(Rng& rng) {
    const Tensor logits = tensor_uniform(Shape{2, 3}, -2.0, 2.0, rng);
    const std::vector<int> labels{static_cast<int>(rng.uniform_int(3)),
                                  static_cast<int>(rng.uniform_int(3))};
    const LossValue base = softmax_cross_entropy(logits, labels);

    std::vector<Probe> probes;
    for (int k = 0; k < 3; ++k) {
        Tensor v = tensor_uniform(logits.shape(), -1.0, 1.0, rng);
        probes.push_back(
            {[=](double t) { return softmax_cross_entropy(add(logits, scale(v, t)), labels).mean_loss; },
             dot(base.grad_logits, v)});
    }
    return aggregate("softmax_ce/grad_logits", probes, kGradCheckTol);
}

// Smallest relu pre-activation magnitude observed on the tape.
double min_relu_margin(const Tape& tape) {
    double margin = 1e300;
    for (const ActCache* cache : {&tape.a1, &tape.a2, &tape.a3, &tape.a4}) {
        if (cache->kind != Activation::relu) continue;
        for (double v : cache->saved.values()) margin = std::min(margin, std::abs(v));
    }
    return margin;
}

// Smallest decisive top-2 gap across both pooling stages; pool input is the
// activated conv output. Relu zeros are pinned at 0 under a small parameter
// displacement, so a window whose runner-up is 0 cannot change argmax and
// counts as safe.
double min_pool_margin(const Model& model, const Tape& tape) {
    double margin = 1e300;
    for (const ActCache* cache : {&tape.a1, &tape.a2}) {
        Tensor act = cache->saved;  // tanh cache already holds the output
        if (model.config.activation == Activation::relu) {
            act = activation_forward(cache->saved, Activation::relu).first;
        }
        const std::int64_t n = act.shape().dim(0), c = act.shape().dim(1);
        const std::int64_t h = act.shape().dim(2), w = act.shape().dim(3);
        for (std::int64_t nn = 0; nn < n; ++nn)
            for (std::int64_t cc = 0; cc < c; ++cc)
                for (std::int64_t i = 0; i < h; i += 2)
                    for (std::int64_t j = 0; j < w; j += 2) {
                        double best = -1e300, second = -1e300;
                        for (int di = 0; di < 2; ++di)
                            for (int dj = 0; dj < 2; ++dj) {
                                const double v = act.at(nn, cc, i + di, j + dj);
                                if (v > best) {
                                    second = best;
                                    best = v;
                                } else {
                                    second = std::max(second, v);
                                }
                            }
                        if (model.config.activation == Activation::relu && second <= 0.0) continue;
                        margin = std::min(margin, best - second);
                    }
    }
    return margin;
}

}  // namespace

double relative_error(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / denom;
}

CheckResult check_directional(const std::string& name,
                              const std::function<double(double)>& loss_at,
                              double analytic_slope, double tol) {
    return aggregate(name, {Probe{loss_at, analytic_slope}}, tol);
}

std::vector<CheckResult> check_layer_adjoints(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<CheckResult> results = conv_checks(rng);
    results.push_back(maxpool_check(rng));
    for (auto& r : dense_checks(rng)) results.push_back(std::move(r));
    results.push_back(activation_check(Activation::relu, "relu/grad_input", rng));
    results.push_back(activation_check(Activation::tanh, "tanh/grad_input", rng));
    results.push_back(softmax_ce_check(rng));
    return results;
}

std::vector<CheckResult> check_model_layers(std::uint64_t seed) {
    const ModelPlan plan = gradcheck_plan();

    // Resample until every relu pre-activation and pool gap clears the
    // finite-difference displacement by a wide margin.
    Model model = build_model(ModelConfig{Activation::relu, kNumClasses, seed}, plan);
    Tensor batch;
    std::vector<int> labels;
    for (std::uint64_t attempt = 0;; ++attempt) {
        if (attempt >= 50) {
            throw GenerationError("no kink-free sample found for the model gradient check");
        }
        const std::uint64_t s = seed + 1000 * (attempt + 1);
        model = build_model(ModelConfig{Activation::relu, kNumClasses, s}, plan);
        Rng rng(s ^ 0x5eedf00dULL);
        batch = tensor_uniform(Shape{2, 1, plan.input_hw, plan.input_hw}, 0.0, 1.0, rng);
        labels = {static_cast<int>(rng.uniform_int(kNumClasses)),
                  static_cast<int>(rng.uniform_int(kNumClasses))};
        auto [logits, tape] = forward(model, batch);
        (void)logits;
        if (min_relu_margin(tape) >= 1e-3 && min_pool_margin(model, tape) >= 1e-3) break;
    }

    auto loss_of = [&labels, &batch](const Model& m) {
        auto [logits, tape] = forward(m, batch);
        (void)tape;
        return softmax_cross_entropy(logits, labels).mean_loss;
    };

    auto [logits, tape] = forward(model, batch);
    const Gradients grads = backward(model, tape, softmax_cross_entropy(logits, labels).grad_logits);

    Rng dir_rng(seed ^ 0xd17ec7ULL);
    std::vector<CheckResult> results;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        std::vector<Probe> probes;
        for (int which = 0; which < 2; ++which) {  // 0 = weights, 1 = bias
            const Tensor& base_param = which == 0 ? model.layers[i].w : model.layers[i].b;
            const Tensor& analytic = which == 0 ? grads[i].w : grads[i].b;
            for (int k = 0; k < 2; ++k) {
                Tensor v = tensor_uniform(base_param.shape(), -1.0, 1.0, dir_rng);
                probes.push_back({[&, i, which, v](double t) {
                                      Model m = model;
                                      Tensor& p = which == 0 ? m.layers[i].w : m.layers[i].b;
                                      p = add(p, scale(v, t));
                                      return loss_of(m);
                                  },
                                  dot(analytic, v)});
            }
        }
        results.push_back(
            aggregate(std::string("model/") + kLayerNames[i], probes, kGradCheckTol));
    }
    return results;
}

std::vector<CheckResult> run_gradcheck(std::uint64_t seed) {
    std::vector<CheckResult> results = check_layer_adjoints(seed);
    for (auto& r : check_model_layers(seed)) results.push_back(std::move(r));
    return results;
}

}  // namespace geomnet
