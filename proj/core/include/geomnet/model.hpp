#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "geomnet/image.hpp"
#include "geomnet/layers.hpp"
#include "geomnet/tensor.hpp"

namespace geomnet {

struct ModelConfig {
    Activation activation = Activation::relu;
    int num_classes = kNumClasses;
    std::uint64_t seed = 1;
};

struct ConvSpec {
    int in_ch, out_ch, kernel, padding;  // stride is 1 throughout
    bool operator==(const ConvSpec&) const = default;
};

// Fixed topology family: conv/act/pool, conv/act/pool, conv/act, flatten,
// dense/act, dense. Two instantiations exist: the full 28x28 network and a
// small 8x8 variant used for gradient checking.
struct ModelPlan {
    int input_hw;
    std::array<ConvSpec, 3> conv;  // C1, C3, C5
    int f6_out;
    bool operator==(const ModelPlan&) const = default;
};

// 28x28 input zero-padded to 32x32 by C1, then the classic chain
// 6@28x28 -> 6@14x14 -> 16@10x10 -> 16@5x5 -> 120@1x1 -> 120 -> 84 -> K.
ModelPlan lenet5_plan();

// 8x8 input variant, small enough for finite-difference sweeps:
// 2@8x8 -> 2@4x4 -> 3@4x4 -> 3@2x2 -> 4@1x1 -> 4 -> 6 -> K.
ModelPlan gradcheck_plan();

// Spatial side length after each stage, starting with the (padded) input:
// {c1_in_padded, c1_out, s2_out, c3_out, s4_out, c5_out}.
std::vector<std::int64_t> spatial_chain(const ModelPlan& plan);

enum LayerId : int { kC1 = 0, kC3 = 1, kC5 = 2, kF6 = 3, kOut = 4 };
inline constexpr std::array<const char*, 5> kLayerNames{"C1", "C3", "C5", "F6", "OUT"};

struct LayerState {
    Tensor w, b;    // parameters
    Tensor vw, vb;  // momentum velocities, shape-matched, zero-initialized
};

struct Model {
    ModelConfig config;
    ModelPlan plan;
    std::array<LayerState, 5> layers;  // C1, C3, C5, F6, OUT

    std::int64_t param_count() const;
};

// Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out))) drawn from a single
// generator seeded with config.seed, in layer order; biases and velocities
// zero. Validates the spatial chain at construction.
Model build_model(const ModelConfig& config);
Model build_model(const ModelConfig& config, const ModelPlan& plan);

struct Tape {
    Shape input_shape;
    Shape logits_shape;
    ConvCache c1, c3, c5;
    ActCache a1, a2, a3, a4;
    PoolContext s2, s4;
    DenseCache f6, out;
};

// batch: [N, 1, hw, hw], pixel values already normalized to [0,1].
std::pair<Tensor, Tape> forward(const Model& model, const Tensor& batch);

struct LayerGrads {
    Tensor w, b;
};
using Gradients = std::array<LayerGrads, 5>;

// Tape must come from a forward call on this model with matching shapes.
Gradients backward(const Model& model, const Tape& tape, const Tensor& grad_logits);

struct Prediction {
    int class_id = 0;
    std::vector<double> probs;
};

Prediction predict(const Model& model, const Image28& image);

}  // namespace geomnet
