#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "geomnet/shapegen.hpp"
#include "geomnet/train.hpp"

using namespace geomnet;

TEST_CASE("train config validation") {
    TrainConfig config;

    auto with = [&](auto setter) {
        TrainConfig c = config;
        setter(c);
        return c;
    };

    CHECK_NOTHROW(validate(config, 100));
    CHECK_THROWS_AS(validate(with([](TrainConfig& c) { c.epochs = 0; }), 100), ConfigError);
    CHECK_THROWS_AS(validate(with([](TrainConfig& c) { c.lr = -0.1; }), 100), ConfigError);
    CHECK_NOTHROW(validate(with([](TrainConfig& c) { c.lr = 0.0; }), 100));
    CHECK_THROWS_AS(validate(with([](TrainConfig& c) { c.momentum = 1.0; }), 100), ConfigError);
    CHECK_THROWS_AS(validate(with([](TrainConfig& c) { c.momentum = -0.1; }), 100), ConfigError);
    CHECK_THROWS_AS(validate(with([](TrainConfig& c) { c.batch_size = 0; }), 100), ConfigError);
    CHECK_THROWS_AS(validate(with([](TrainConfig& c) { c.batch_size = 101; }), 100), ConfigError);
}

TEST_CASE("shuffle is a deterministic permutation") {
    Rng a(5), b(5), c(6);
    const auto pa = shuffled_indices(100, a);
    const auto pb = shuffled_indices(100, b);
    const auto pc = shuffled_indices(100, c);
    CHECK(pa == pb);
    CHECK(pa != pc);

    auto sorted = pa;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::int32_t> iota(100);
    std::iota(iota.begin(), iota.end(), 0);
    CHECK(sorted == iota);
}

TEST_CASE("make_batch normalizes bytes into [0,1]") {
    LabeledDataset data;
    Image28 img;
    img.at(0, 0) = 255;
    img.at(0, 1) = 51;
    data.images.push_back(img);
    data.labels.push_back(2);

    const std::vector<std::int32_t> idx{0};
    const Tensor batch = make_batch(data, idx);
    CHECK(batch.shape() == Shape{1, 1, 28, 28});
    CHECK(batch[0] == 1.0);
    CHECK(batch[1] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(batch[2] == 0.0);
}

TEST_CASE("metrics csv format") {
    const std::vector<EpochMetrics> rows{{1, "train", 1.0, 0.5}, {1, "test", 0.25, 0.75}};
    CHECK(metrics_csv(rows) ==
          "epoch,split,mean_loss,accuracy\n"
          "1,train,1.000000,0.500000\n"
          "1,test,0.250000,0.750000\n");
}

TEST_CASE("training with lr 0 leaves parameters bit-identical to initialization") {
    const DatasetPair data = build_datasets(11, 6, 2, false);
    TrainConfig config;
    config.epochs = 1;
    config.batch_size = 4;
    config.lr = 0.0;
    config.seed = 99;

    const TrainResult result = train_model(config, data.train, data.test);
    const Model fresh = build_model(ModelConfig{config.activation, kNumClasses, config.seed});
    for (std::size_t i = 0; i < fresh.layers.size(); ++i) {
        CHECK(result.model.layers[i].w == fresh.layers[i].w);
        CHECK(result.model.layers[i].b == fresh.layers[i].b);
    }
}

TEST_CASE("training run shape: metrics rows, determinism, loss moves") {
    const DatasetPair data = build_datasets(12, 12, 2, false);
    TrainConfig config;
    config.epochs = 3;
    config.batch_size = 4;
    config.seed = 7;

    const TrainResult a = train_model(config, data.train, data.test);
    const TrainResult b = train_model(config, data.train, data.test);

    REQUIRE(a.metrics.size() == 6);  // 2 rows per epoch
    for (int e = 0; e < 3; ++e) {
        CHECK(a.metrics[static_cast<std::size_t>(2 * e)].epoch == e + 1);
        CHECK(a.metrics[static_cast<std::size_t>(2 * e)].split == "train");
        CHECK(a.metrics[static_cast<std::size_t>(2 * e + 1)].epoch == e + 1);
        CHECK(a.metrics[static_cast<std::size_t>(2 * e + 1)].split == "test");
    }
    for (const auto& row : a.metrics) {
        CHECK(row.mean_loss >= 0.0);
        CHECK(row.accuracy >= 0.0);
        CHECK(row.accuracy <= 1.0);
    }

    // bit determinism of the whole run
    CHECK(metrics_csv(a.metrics) == metrics_csv(b.metrics));
    for (std::size_t i = 0; i < a.model.layers.size(); ++i) {
        CHECK(a.model.layers[i].w == b.model.layers[i].w);
    }

    // parameters did move with lr > 0
    const Model fresh = build_model(ModelConfig{config.activation, kNumClasses, config.seed});
    bool moved = false;
    for (std::size_t i = 0; i < fresh.layers.size(); ++i) {
        moved = moved || !(a.model.layers[i].w == fresh.layers[i].w);
    }
    CHECK(moved);
}

TEST_CASE("evaluate fills a consistent confusion matrix") {
    const DatasetPair data = build_datasets(13, 30, 1, false);
    const Model model = build_model(ModelConfig{Activation::relu, 3, 1});
    const EvalResult result = evaluate(model, data.test);

    CHECK(result.total == 30);
    REQUIRE(result.confusion.size() == 3);
    std::int64_t sum = 0, diag = 0;
    for (std::size_t t = 0; t < 3; ++t) {
        std::int64_t row = 0;
        for (std::size_t p = 0; p < 3; ++p) {
            row += result.confusion[t][p];
            sum += result.confusion[t][p];
        }
        CHECK(row == 10);  // balanced split: 10 per class
        diag += result.confusion[t][t];
    }
    CHECK(sum == 30);
    CHECK(result.accuracy == doctest::Approx(static_cast<double>(diag) / 30.0).epsilon(1e-15));
}

TEST_CASE("evaluate rejects labels beyond the model's classes") {
    const Model narrow = build_model(ModelConfig{Activation::relu, 2, 1});
    LabeledDataset data;
    data.images.resize(1);
    data.labels = {2};
    CHECK_THROWS_AS(evaluate(narrow, data), ContractError);
}
