#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "geomnet/image.hpp"
#include "geomnet/model.hpp"

namespace geomnet {

struct TrainConfig {
    int epochs = 10;
    double lr = 0.001;
    double momentum = 0.9;
    int batch_size = 8;
    std::uint64_t seed = 1;
    Activation activation = Activation::relu;
    std::filesystem::path data_dir;
    std::filesystem::path model_out = "model.ckpt";
    std::filesystem::path metrics_out = "metrics.csv";
};

// Throws ConfigError on a bad combination. lr = 0 is allowed (a frozen run
// must leave the parameters bit-identical to initialization).
void validate(const TrainConfig& config, std::size_t train_size);

struct EpochMetrics {
    int epoch = 0;
    std::string split;  // "train" or "test"
    double mean_loss = 0.0;
    double accuracy = 0.0;
};

struct TrainResult {
    Model model;
    std::vector<EpochMetrics> metrics;  // train row then test row, per epoch
};

// Per epoch: seeded Fisher-Yates shuffle, minibatch forward/loss/backward/
// momentum step. The train row carries the running mean loss/accuracy over
// the epoch's minibatches; the test row is a full evaluation afterwards.
// Bit-deterministic given (config, data).
TrainResult train_model(const TrainConfig& config, const LabeledDataset& train_set,
                        const LabeledDataset& test_set, std::ostream* progress = nullptr);

struct EvalResult {
    double accuracy = 0.0;
    std::vector<std::vector<std::int64_t>> confusion;  // [true][predicted]
    std::int64_t total = 0;
};

EvalResult evaluate(const Model& model, const LabeledDataset& dataset, int batch_size = 256);

// CSV with header epoch,split,mean_loss,accuracy; floats at 6 decimals,
// LF line endings.
std::string metrics_csv(const std::vector<EpochMetrics>& metrics);

std::vector<std::int32_t> shuffled_indices(std::size_t n, Rng& rng);

// [len(indices), 1, 28, 28] batch with pixels normalized to [0,1].
Tensor make_batch(const LabeledDataset& dataset, std::span<const std::int32_t> indices);

}  // namespace geomnet
