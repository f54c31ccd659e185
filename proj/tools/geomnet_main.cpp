// geomnet CLI: gen | train | eval | predict | gradcheck
//
// Exit codes: 0 success, 1 usage error, 2 I/O or format error,
// 3 verification failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "geomnet/checkpoint.hpp"
#include "geomnet/gradcheck.hpp"
#include "geomnet/idx_io.hpp"
#include "geomnet/shapegen.hpp"
#include "geomnet/train.hpp"

namespace {

using namespace geomnet;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitVerification = 3;

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void print_split_counts(const char* name, const LabeledDataset& dataset) {
    std::array<int, kNumClasses> counts{};
    for (auto label : dataset.labels) counts[label] += 1;
    std::cout << name << ": " << dataset.size() << " images";
    for (int c = 0; c < kNumClasses; ++c) {
        std::cout << "  " << kClassNames[static_cast<std::size_t>(c)] << "=" << counts[static_cast<std::size_t>(c)];
    }
    std::cout << '\n';
}

int cmd_gen(const std::string& out_dir, std::uint64_t seed, int n_test, int aug_factor,
            bool holdout) {
    const DatasetPair data = build_datasets(seed, n_test, aug_factor, holdout);
    write_idx(data.train, out_dir, Split::train);
    write_idx(data.test, out_dir, Split::test);
    print_split_counts("train", data.train);
    print_split_counts("test", data.test);
    return kExitOk;
}

int cmd_train(const TrainConfig& config) {
    const LabeledDataset train_set = read_idx(config.data_dir, Split::train);
    const LabeledDataset test_set = read_idx(config.data_dir, Split::test);

    const auto started = std::chrono::steady_clock::now();
    TrainResult result = train_model(config, train_set, test_set, &std::cout);
    const auto elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::cerr << "trained " << config.epochs << " epochs in " << fixed6(elapsed) << " s\n";

    std::ofstream metrics(config.metrics_out, std::ios::binary | std::ios::trunc);
    if (!metrics) throw FormatError("cannot open " + config.metrics_out.string() + " for writing", 0);
    metrics << metrics_csv(result.metrics);
    metrics.close();

    save_checkpoint(result.model, config.model_out);
    return kExitOk;
}

int cmd_eval(const std::string& model_path, const std::string& data_dir, const std::string& split) {
    const Model model = load_checkpoint(model_path);
    const LabeledDataset dataset =
        read_idx(data_dir, split == "train" ? Split::train : Split::test);
    const EvalResult result = evaluate(model, dataset);

    nlohmann::json j;
    j["accuracy"] = result.accuracy;
    j["confusion"] = result.confusion;
    std::cout << j.dump() << '\n';
    return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& images_file, int index) {
    const Model model = load_checkpoint(model_path);
    const std::vector<Image28> images = read_idx_images(images_file);
    if (index < 0 || static_cast<std::size_t>(index) >= images.size()) {
        std::cerr << "index " << index << " out of range, file has " << images.size()
                  << " images\n";
        return kExitUsage;
    }
    const Prediction pred = predict(model, images[static_cast<std::size_t>(index)]);
    std::cout << kClassNames[static_cast<std::size_t>(pred.class_id)] << '\n';
    for (int c = 0; c < kNumClasses; ++c) {
        std::cout << kClassNames[static_cast<std::size_t>(c)] << " "
                  << fixed6(pred.probs[static_cast<std::size_t>(c)]) << '\n';
    }
    return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed) {
    const std::vector<CheckResult> results = run_gradcheck(seed);
    bool all_pass = true;
    for (const auto& r : results) {
        std::printf("%-24s max_rel_err=%.3e  %s\n", r.name.c_str(), r.max_rel_err,
                    r.pass ? "PASS" : "FAIL");
        all_pass = all_pass && r.pass;
    }
    if (!all_pass) {
        for (const auto& r : results) {
            if (!r.pass) {
                std::cout << "gradcheck: FAIL (" << r.name << " exceeded tolerance "
                          << kGradCheckTol << ")\n";
                return kExitVerification;
            }
        }
    }
    std::cout << "gradcheck: PASS (" << results.size() << " checks, tolerance " << kGradCheckTol
              << ")\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LeNet-5 geometric-figure classifier: dataset generation, training, "
                 "evaluation, prediction, gradient checking"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate the shape dataset as IDX files");
    std::string gen_out;
    std::uint64_t gen_seed = 1;
    int gen_n_test = 300;
    int gen_aug_factor = 7;
    bool gen_holdout = false;
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--seed", gen_seed, "Generation seed");
    gen->add_option("--n-test", gen_n_test, "Test images (multiple of 3)");
    gen->add_option("--aug-factor", gen_aug_factor, "Train images per test image");
    gen->add_flag("--holdout", gen_holdout, "Build train from fresh images disjoint from test");

    // train
    auto* train = app.add_subcommand("train", "Train the network on an IDX dataset");
    TrainConfig tc;
    std::string train_data, train_model_out = "model.ckpt", train_metrics = "metrics.csv";
    std::string train_activation = "relu";
    train->add_option("--data", train_data, "Dataset directory")->required();
    train->add_option("--model", train_model_out, "Checkpoint output path");
    train->add_option("--metrics", train_metrics, "Metrics CSV output path");
    train->add_option("--epochs", tc.epochs, "Training epochs");
    train->add_option("--lr", tc.lr, "Learning rate");
    train->add_option("--momentum", tc.momentum, "Momentum coefficient");
    train->add_option("--batch-size", tc.batch_size, "Minibatch size");
    train->add_option("--seed", tc.seed, "Init/shuffle seed");
    train->add_option("--activation", train_activation, "Hidden activation: relu|tanh")
        ->check(CLI::IsMember({"relu", "tanh"}));

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint; prints JSON");
    std::string eval_model, eval_data, eval_split = "test";
    eval->add_option("--model", eval_model, "Checkpoint path")->required();
    eval->add_option("--data", eval_data, "Dataset directory")->required();
    eval->add_option("--split", eval_split, "Split to evaluate")
        ->check(CLI::IsMember({"train", "test"}));

    // predict
    auto* pred = app.add_subcommand("predict", "Classify one image from an IDX images file");
    std::string pred_model, pred_images;
    int pred_index = 0;
    pred->add_option("--model", pred_model, "Checkpoint path")->required();
    pred->add_option("--data", pred_images, "IDX images file")->required();
    pred->add_option("--index", pred_index, "Image index");

    // gradcheck
    auto* grad = app.add_subcommand("gradcheck", "Verify gradients against finite differences");
    std::uint64_t grad_seed = 1;
    grad->add_option("--seed", grad_seed, "Check seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_gen(gen_out, gen_seed, gen_n_test, gen_aug_factor, gen_holdout);
        if (train->parsed()) {
            tc.data_dir = train_data;
            tc.model_out = train_model_out;
            tc.metrics_out = train_metrics;
            tc.activation = train_activation == "relu" ? Activation::relu : Activation::tanh;
            return cmd_train(tc);
        }
        if (eval->parsed()) return cmd_eval(eval_model, eval_data, eval_split);
        if (pred->parsed()) return cmd_predict(pred_model, pred_images, pred_index);
        if (grad->parsed()) return cmd_gradcheck(grad_seed);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitUsage;
}
