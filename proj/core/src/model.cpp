#include "geomnet/model.hpp"

#include <cmath>
#include <string>

#include "geomnet/errors.hpp"

namespace geomnet {

namespace {

Tensor glorot_uniform(const Shape& shape, std::int64_t fan_in, std::int64_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    return tensor_uniform(shape, -limit, limit, rng);
}

ConvParams conv_params(const Model& model, int layer) {
    const ConvSpec& spec = model.plan.conv[static_cast<std::size_t>(layer)];
    return ConvParams{model.layers[static_cast<std::size_t>(layer)].w,
                      model.layers[static_cast<std::size_t>(layer)].b, 1, spec.padding};
}

DenseParams dense_params(const Model& model, int layer) {
    return DenseParams{model.layers[static_cast<std::size_t>(layer)].w,
                       model.layers[static_cast<std::size_t>(layer)].b};
}

}  // namespace

ModelPlan lenet5_plan() {
    return ModelPlan{28, {{{1, 6, 5, 2}, {6, 16, 5, 0}, {16, 120, 5, 0}}}, 84};
}

ModelPlan gradcheck_plan() {
    return ModelPlan{8, {{{1, 2, 3, 1}, {2, 3, 3, 1}, {3, 4, 2, 0}}}, 6};
}

std::vector<std::int64_t> spatial_chain(const ModelPlan& plan) {
    std::vector<std::int64_t> chain;
    std::int64_t hw = plan.input_hw;
    chain.push_back(hw + 2 * plan.conv[0].padding);
    for (int i = 0; i < 3; ++i) {
        hw = conv_out_dim(hw, plan.conv[static_cast<std::size_t>(i)].kernel, 1,
                          plan.conv[static_cast<std::size_t>(i)].padding);
        chain.push_back(hw);
        if (i < 2) {
            hw /= 2;
            chain.push_back(hw);
        }
    }
    return chain;
}

std::int64_t Model::param_count() const {
    std::int64_t n = 0;
    for (const auto& layer : layers) n += layer.w.size() + layer.b.size();
    return n;
}

Model build_model(const ModelConfig& config) { return build_model(config, lenet5_plan()); }

Model build_model(const ModelConfig& config, const ModelPlan& plan) {
    if (config.num_classes < 2) {
        throw ConfigError("num_classes must be >= 2, got " + std::to_string(config.num_classes));
    }

    // Shape-chain assertion: pooled stages must be even, C5 must collapse to
    // 1x1 so the flatten yields exactly conv[2].out_ch features.
    std::int64_t hw = plan.input_hw;
    for (int i = 0; i < 3; ++i) {
        const ConvSpec& spec = plan.conv[static_cast<std::size_t>(i)];
        hw = conv_out_dim(hw, spec.kernel, 1, spec.padding);
        if (hw < 1) throw ContractError("shape chain collapsed at conv stage " + std::to_string(i));
        if (i < 2) {
            if (hw % 2 != 0) {
                throw ContractError("pool input at stage " + std::to_string(i) +
                                    " is odd: " + std::to_string(hw));
            }
            hw /= 2;
        }
    }
    if (hw != 1) {
        throw ContractError("C5 output must be 1x1, got " + std::to_string(hw) + "x" +
                            std::to_string(hw));
    }

    Model model;
    model.config = config;
    model.plan = plan;

    Rng rng(config.seed);
    for (int i = 0; i < 3; ++i) {
        const ConvSpec& spec = plan.conv[static_cast<std::size_t>(i)];
        const Shape wshape{spec.out_ch, spec.in_ch, spec.kernel, spec.kernel};
        const std::int64_t fan_in = static_cast<std::int64_t>(spec.in_ch) * spec.kernel * spec.kernel;
        const std::int64_t fan_out =
            static_cast<std::int64_t>(spec.out_ch) * spec.kernel * spec.kernel;
        auto& layer = model.layers[static_cast<std::size_t>(i)];
        layer.w = glorot_uniform(wshape, fan_in, fan_out, rng);
        layer.b = Tensor(Shape{spec.out_ch});
        layer.vw = Tensor(wshape);
        layer.vb = Tensor(Shape{spec.out_ch});
    }
    const int flat = plan.conv[2].out_ch;
    const std::array<std::pair<int, int>, 2> dense_dims{
        {{flat, plan.f6_out}, {plan.f6_out, config.num_classes}}};
    for (int i = 0; i < 2; ++i) {
        const auto [in_f, out_f] = dense_dims[static_cast<std::size_t>(i)];
        auto& layer = model.layers[static_cast<std::size_t>(kF6 + i)];
        layer.w = glorot_uniform(Shape{out_f, in_f}, in_f, out_f, rng);
        layer.b = Tensor(Shape{out_f});
        layer.vw = Tensor(Shape{out_f, in_f});
        layer.vb = Tensor(Shape{out_f});
    }
    return model;
}

std::pair<Tensor, Tape> forward(const Model& model, const Tensor& batch) {
    if (batch.shape().rank() != 4 || batch.shape().dim(1) != 1 ||
        batch.shape().dim(2) != model.plan.input_hw ||
        batch.shape().dim(3) != model.plan.input_hw) {
        throw ShapeError("forward expects [N,1," + std::to_string(model.plan.input_hw) + "," +
                         std::to_string(model.plan.input_hw) + "], got " + batch.shape().str());
    }
    const std::int64_t n = batch.shape().dim(0);

    Tape tape;
    tape.input_shape = batch.shape();

    // conv stages run through the im2col path; the naive path is the
    // reference the tests compare against.
    auto [z1, c1] = conv2d_forward(batch, conv_params(model, kC1), ConvPath::im2col);
    tape.c1 = std::move(c1);
    auto [h1, a1] = activation_forward(z1, model.config.activation);
    tape.a1 = std::move(a1);
    auto [p1, s2] = maxpool2_forward(h1);
    tape.s2 = std::move(s2);

    auto [z2, c3] = conv2d_forward(p1, conv_params(model, kC3), ConvPath::im2col);
    tape.c3 = std::move(c3);
    auto [h2, a2] = activation_forward(z2, model.config.activation);
    tape.a2 = std::move(a2);
    auto [p2, s4] = maxpool2_forward(h2);
    tape.s4 = std::move(s4);

    auto [z3, c5] = conv2d_forward(p2, conv_params(model, kC5), ConvPath::im2col);
    tape.c5 = std::move(c5);
    auto [h3, a3] = activation_forward(z3, model.config.activation);
    tape.a3 = std::move(a3);

    const Tensor flat = h3.reshaped(Shape{n, model.plan.conv[2].out_ch});

    auto [z4, f6] = dense_forward(flat, dense_params(model, kF6));
    tape.f6 = std::move(f6);
    auto [h4, a4] = activation_forward(z4, model.config.activation);
    tape.a4 = std::move(a4);

    auto [logits, outc] = dense_forward(h4, dense_params(model, kOut));
    tape.out = std::move(outc);
    tape.logits_shape = logits.shape();
    return {std::move(logits), std::move(tape)};
}

Gradients backward(const Model& model, const Tape& tape, const Tensor& grad_logits) {
    if (grad_logits.shape() != tape.logits_shape) {
        throw ContractError("backward: grad_logits " + grad_logits.shape().str() +
                            " does not match tape logits " + tape.logits_shape.str());
    }
    const std::int64_t n = tape.input_shape.dim(0);

    Gradients grads;

    DenseGrads g_out = dense_backward(grad_logits, tape.out);
    grads[kOut] = {std::move(g_out.weights), std::move(g_out.bias)};

    Tensor d = activation_backward(g_out.input, tape.a4);
    DenseGrads g_f6 = dense_backward(d, tape.f6);
    grads[kF6] = {std::move(g_f6.weights), std::move(g_f6.bias)};

    d = g_f6.input.reshaped(Shape{n, model.plan.conv[2].out_ch, 1, 1});
    d = activation_backward(d, tape.a3);
    ConvGrads g_c5 = conv2d_backward(d, tape.c5);
    grads[kC5] = {std::move(g_c5.weights), std::move(g_c5.bias)};

    d = maxpool2_backward(g_c5.input, tape.s4);
    d = activation_backward(d, tape.a2);
    ConvGrads g_c3 = conv2d_backward(d, tape.c3);
    grads[kC3] = {std::move(g_c3.weights), std::move(g_c3.bias)};

    d = maxpool2_backward(g_c3.input, tape.s2);
    d = activation_backward(d, tape.a1);
    ConvGrads g_c1 = conv2d_backward(d, tape.c1);
    grads[kC1] = {std::move(g_c1.weights), std::move(g_c1.bias)};

    return grads;
}

Prediction predict(const Model& model, const Image28& image) {
    if (model.plan.input_hw != Image28::kSide) {
        throw ContractError("predict needs the 28x28 topology");
    }
    Tensor batch(Shape{1, 1, Image28::kSide, Image28::kSide});
    for (int i = 0; i < Image28::kPixels; ++i) {
        batch[i] = static_cast<double>(image.pixels[static_cast<std::size_t>(i)]) / 255.0;
    }
    auto [logits, tape] = forward(model, batch);
    (void)tape;
    const Tensor probs = softmax(logits);
    Prediction pred;
    pred.probs.resize(static_cast<std::size_t>(model.config.num_classes));
    for (int j = 0; j < model.config.num_classes; ++j) {
        pred.probs[static_cast<std::size_t>(j)] = probs[j];
        if (probs[j] > probs[pred.class_id]) pred.class_id = j;
    }
    return pred;
}

}  // namespace geomnet
