#include "geomnet/train.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "geomnet/loss.hpp"
#include "geomnet/optim.hpp"

namespace geomnet {

namespace {

std::string format_fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void check_labels(const LabeledDataset& dataset, int num_classes, const char* which) {
    for (std::size_t i = 0; i < dataset.labels.size(); ++i) {
        if (dataset.labels[i] >= num_classes) {
            throw ContractError(std::string(which) + " label " +
                                std::to_string(dataset.labels[i]) + " at index " +
                                std::to_string(i) + " exceeds model classes " +
                                std::to_string(num_classes));
        }
    }
}

std::vector<int> batch_labels(const LabeledDataset& dataset,
                              std::span<const std::int32_t> indices) {
    std::vector<int> labels(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        labels[i] = dataset.labels[static_cast<std::size_t>(indices[i])];
    }
    return labels;
}

std::int64_t count_correct(const Tensor& logits, std::span<const int> labels) {
    const std::int64_t n = logits.shape().dim(0), k = logits.shape().dim(1);
    std::int64_t correct = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        std::int64_t best = 0;
        for (std::int64_t j = 1; j < k; ++j) {
            if (logits[i * k + j] > logits[i * k + best]) best = j;
        }
        correct += best == labels[static_cast<std::size_t>(i)] ? 1 : 0;
    }
    return correct;
}

}  // namespace

void validate(const TrainConfig& config, std::size_t train_size) {
    if (config.epochs < 1) {
        throw ConfigError("epochs must be >= 1, got " + std::to_string(config.epochs));
    }
    if (config.lr < 0.0) {
        throw ConfigError("learning rate must be >= 0, got " + std::to_string(config.lr));
    }
    if (config.momentum < 0.0 || config.momentum >= 1.0) {
        throw ConfigError("momentum must be in [0,1), got " + std::to_string(config.momentum));
    }
    if (config.batch_size < 1 || static_cast<std::size_t>(config.batch_size) > train_size) {
        throw ConfigError("batch_size must be in [1," + std::to_string(train_size) + "], got " +
                          std::to_string(config.batch_size));
    }
}

std::vector<std::int32_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::int32_t> indices(n);
    std::iota(indices.begin(), indices.end(), 0);
    for (std::size_t i = n; i > 1; --i) {  // Fisher-Yates
        const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i)));
        std::swap(indices[i - 1], indices[j]);
    }
    return indices;
}

Tensor make_batch(const LabeledDataset& dataset, std::span<const std::int32_t> indices) {
    const auto n = static_cast<std::int64_t>(indices.size());
    Tensor out(Shape{n, 1, Image28::kSide, Image28::kSide});
    double* dst = out.data();
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& img = dataset.images[static_cast<std::size_t>(indices[static_cast<std::size_t>(i)])];
        for (int p = 0; p < Image28::kPixels; ++p) {
            dst[i * Image28::kPixels + p] =
                static_cast<double>(img.pixels[static_cast<std::size_t>(p)]) / 255.0;
        }
    }
    return out;
}

TrainResult train_model(const TrainConfig& config, const LabeledDataset& train_set,
                        const LabeledDataset& test_set, std::ostream* progress) {
    validate(config, train_set.size());
    if (train_set.images.size() != train_set.labels.size() ||
        test_set.images.size() != test_set.labels.size()) {
        throw ContractError("dataset image/label count mismatch");
    }

    TrainResult result;
    result.model = build_model(ModelConfig{config.activation, kNumClasses, config.seed});
    Model& model = result.model;
    check_labels(train_set, model.config.num_classes, "train");
    check_labels(test_set, model.config.num_classes, "test");

    const std::size_t n = train_set.size();
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(config.seed, SeedDomain::shuffle,
                                    static_cast<std::uint64_t>(epoch)));
        const std::vector<std::int32_t> order = shuffled_indices(n, shuffle_rng);

        double loss_sum = 0.0;
        std::int64_t correct = 0;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch_size));
            const std::span<const std::int32_t> idx(order.data() + start, end - start);
            const Tensor batch = make_batch(train_set, idx);
            const std::vector<int> labels = batch_labels(train_set, idx);

            auto [logits, tape] = forward(model, batch);
            const LossValue loss = softmax_cross_entropy(logits, labels);
            loss_sum += loss.mean_loss * static_cast<double>(idx.size());
            correct += count_correct(logits, labels);

            const Gradients grads = backward(model, tape, loss.grad_logits);
            for (std::size_t li = 0; li < model.layers.size(); ++li) {
                sgd_momentum_step(model.layers[li].w, grads[li].w, model.layers[li].vw,
                                  config.lr, config.momentum);
                sgd_momentum_step(model.layers[li].b, grads[li].b, model.layers[li].vb,
                                  config.lr, config.momentum);
            }
        }

        EpochMetrics train_row{epoch, "train", loss_sum / static_cast<double>(n),
                               static_cast<double>(correct) / static_cast<double>(n)};
        result.metrics.push_back(train_row);

        // Full pass over the test split with the post-epoch parameters.
        double test_loss = 0.0;
        std::int64_t test_correct = 0;
        const std::size_t tn = test_set.size();
        std::vector<std::int32_t> test_idx(tn);
        std::iota(test_idx.begin(), test_idx.end(), 0);
        for (std::size_t start = 0; start < tn; start += 256) {
            const std::size_t end = std::min(tn, start + 256);
            const std::span<const std::int32_t> idx(test_idx.data() + start, end - start);
            const Tensor batch = make_batch(test_set, idx);
            const std::vector<int> labels = batch_labels(test_set, idx);
            auto [logits, tape] = forward(model, batch);
            (void)tape;
            const LossValue loss = softmax_cross_entropy(logits, labels);
            test_loss += loss.mean_loss * static_cast<double>(idx.size());
            test_correct += count_correct(logits, labels);
        }
        EpochMetrics test_row{epoch, "test", test_loss / static_cast<double>(tn),
                              static_cast<double>(test_correct) / static_cast<double>(tn)};
        result.metrics.push_back(test_row);

        if (progress) {
            *progress << "epoch " << epoch << " train mean_loss=" << format_fixed6(train_row.mean_loss)
                      << " accuracy=" << format_fixed6(train_row.accuracy) << '\n'
                      << "epoch " << epoch << " test mean_loss=" << format_fixed6(test_row.mean_loss)
                      << " accuracy=" << format_fixed6(test_row.accuracy) << '\n';
        }
    }
    return result;
}

EvalResult evaluate(const Model& model, const LabeledDataset& dataset, int batch_size) {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    check_labels(dataset, model.config.num_classes, "eval");

    EvalResult result;
    const auto k = static_cast<std::size_t>(model.config.num_classes);
    result.confusion.assign(k, std::vector<std::int64_t>(k, 0));
    result.total = static_cast<std::int64_t>(dataset.size());

    const std::size_t n = dataset.size();
    std::vector<std::int32_t> indices(n);
    std::iota(indices.begin(), indices.end(), 0);
    std::int64_t correct = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(n, start + static_cast<std::size_t>(batch_size));
        const std::span<const std::int32_t> idx(indices.data() + start, end - start);
        const Tensor batch = make_batch(dataset, idx);
        auto [logits, tape] = forward(model, batch);
        (void)tape;
        const std::int64_t rows = logits.shape().dim(0);
        const std::int64_t cols = logits.shape().dim(1);
        for (std::int64_t i = 0; i < rows; ++i) {
            std::int64_t best = 0;
            for (std::int64_t j = 1; j < cols; ++j) {
                if (logits[i * cols + j] > logits[i * cols + best]) best = j;
            }
            const auto truth = dataset.labels[start + static_cast<std::size_t>(i)];
            result.confusion[truth][static_cast<std::size_t>(best)] += 1;
            correct += best == truth ? 1 : 0;
        }
    }
    result.accuracy = n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n);
    return result;
}

std::string metrics_csv(const std::vector<EpochMetrics>& metrics) {
    std::string out = "epoch,split,mean_loss,accuracy\n";
    for (const auto& row : metrics) {
        out += std::to_string(row.epoch);
        out += ',';
        out += row.split;
        out += ',';
        out += format_fixed6(row.mean_loss);
        out += ',';
        out += format_fixed6(row.accuracy);
        out += '\n';
    }
    return out;
}

}  // namespace geomnet
