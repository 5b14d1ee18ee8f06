/*
 * Copyright 2026 the umamba authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "umamba/checkpoint.hpp"
#include "umamba/metrics.hpp"
#include "umamba/planner.hpp"
#include "umamba/ssm.hpp"
#include "umamba/synth.hpp"
#include "umamba/tensor_io.hpp"
#include "umamba/gradcheck.hpp"
#include "umamba/train.hpp"

namespace fs = std::filesystem;
using namespace umamba;

// Exit codes: 0 ok, 2 validation error, 3 numeric failure.
namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

struct PlanArgs {
    std::string manifest;
    std::string out;
    double memory_budget = 4096.0;
    std::string variant = "enc";
    int64_t base_channels = 32;
};

int cmd_plan(const PlanArgs& a) {
    DatasetManifest m = DatasetManifest::load(a.manifest);
    m.validate(true);
    DatasetFingerprint fp = fingerprint(m);
    PlannerCfg pc;
    pc.memory_budget_mb = a.memory_budget;
    pc.n_classes = m.n_classes;
    pc.base_channels = a.base_channels;
    pc.variant = variant_from_name(a.variant);
    NetworkPlan plan = plan_configuration(fp, m.dimensionality, pc);
    std::string text = plan.to_json();
    std::cout << text;
    if (!a.out.empty()) {
        std::ofstream f(a.out, std::ios::trunc);
        if (!f) throw IoError(cat("cannot write ", a.out));
        f << text;
    }
    return 0;
}

struct SynthArgs {
    std::string task = "blobs";
    int64_t n = 16;
    int64_t n_test = -1;
    int64_t size = 64;
    uint64_t seed = 1;
    std::string out;
};

int cmd_synth(const SynthArgs& a) {
    int64_t n_test = a.n_test >= 0 ? a.n_test : a.n / 5;
    DatasetManifest m = synth_generate(synth_task_from_name(a.task), a.n, n_test, a.size, a.seed, a.out);
    std::cout << "wrote " << m.cases.size() << " cases to " << a.out << "\n";
    return 0;
}

struct TrainArgs {
    std::string manifest;
    std::string plan_path;
    std::string variant = "enc";
    uint64_t seed = 1;
    int64_t epochs = 50;
    int64_t batch = 0;
    int64_t base_channels = 32;
    double memory_budget = 4096.0;
    bool augment = false;
    std::string out = "run";
};

int cmd_train(const TrainArgs& a) {
    DatasetManifest m = DatasetManifest::load(a.manifest);
    m.validate(true);
    DatasetFingerprint fp = fingerprint(m);
    NetworkPlan plan;
    if (!a.plan_path.empty()) {
        std::ifstream f(a.plan_path);
        if (!f) throw IoError(cat("cannot open ", a.plan_path));
        std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        plan = NetworkPlan::from_json(text);
    } else {
        PlannerCfg pc;
        pc.memory_budget_mb = a.memory_budget;
        pc.n_classes = m.n_classes;
        pc.base_channels = a.base_channels;
        plan = plan_configuration(fp, m.dimensionality, pc);
    }
    plan.variant = variant_from_name(a.variant);
    auto samples = load_samples(m, "train", fp);
    Network net(plan, DType::F32, a.seed);
    TrainCfg tc;
    tc.epochs = a.epochs;
    tc.batch_size = a.batch;
    tc.seed = a.seed;
    tc.augment_flips = a.augment;
    tc.augment_intensity = a.augment;
    tc.out_dir = a.out;
    TrainResult r = train(net, samples, tc);
    std::cout << "final epoch loss " << r.epoch_loss.back() << "; checkpoint in " << a.out << "\n";
    return 0;
}

struct PredictArgs {
    std::string checkpoint;
    std::string manifest;
    std::string split = "test";
    double overlap = 0.5;
    bool plain_average = false;
    std::string out = "predictions";
};

int cmd_predict(const PredictArgs& a) {
    Checkpoint ck = Checkpoint::load(a.checkpoint);
    Network net = ck.instantiate();
    DatasetManifest m = DatasetManifest::load(a.manifest);
    m.validate(true);
    DatasetFingerprint fp = fingerprint(m);
    fs::create_directories(a.out);
    for (const auto* c : m.split_cases(a.split)) {
        SegmentationSample s = load_sample(m, *c, fp);
        Tensor labels = net.predict_labels_sliding(s.image, a.overlap, !a.plain_average);
        write_tensor((fs::path(a.out) / (c->id + ".umtn")).string(), labels);
    }
    std::cout << "predictions written to " << a.out << "\n";
    return 0;
}

struct EvalArgs {
    std::string manifest;
    std::string pred;
    std::string split = "test";
    std::string metric = "dsc,nsd";  // or "f1"
    double tolerance = 1.0;
    double iou = 0.5;
    std::string out;
};

int cmd_evaluate(const EvalArgs& a) {
    DatasetManifest m = DatasetManifest::load(a.manifest);
    m.validate(true);
    EvalReport report;
    report.instance_task = a.metric == "f1";
    for (const auto* c : m.split_cases(a.split)) {
        Tensor gt = read_tensor(resolve_path(m.root, c->label));
        Tensor pred = read_tensor((fs::path(a.pred) / (c->id + ".umtn")).string());
        if (report.instance_task) {
            InstanceMap pi = instances_from_semantic(pred);
            InstanceMap gi = instances_from_semantic(gt);
            F1Result f = f1_instance(pi, gi, a.iou);
            report.instance_rows.push_back({c->id, f.f1, f.precision, f.recall});
        } else {
            for (int cls = 1; cls < m.n_classes; ++cls) {
                SemanticCaseRow row;
                row.case_id = c->id;
                row.cls = cls;
                row.dsc = dsc_class(pred, gt, cls);
                row.nsd = nsd_class(pred, gt, cls, a.tolerance, c->spacing);
                report.semantic_rows.push_back(row);
            }
        }
    }
    std::string text = report.to_text();
    std::cout << text;
    if (!a.out.empty()) {
        std::ofstream f(a.out, std::ios::trunc);
        if (!f) throw IoError(cat("cannot write ", a.out));
        f << text;
    }
    return 0;
}

int cmd_gradcheck() {
    auto entries = run_gradient_suite();
    bool all_ok = true;
    for (const auto& e : entries) {
        all_ok &= e.ok;
        std::cout << (e.ok ? "ok   " : "FAIL ") << e.name << " max_rel_err=" << e.max_rel_err << "\n";
    }
    if (!all_ok) {
        std::cerr << "error: gradient check failed\n";
        return kExitNumeric;
    }
    return 0;
}

int cmd_bench_scan(const std::vector<int64_t>& lengths) {
    auto rows = bench_scan(lengths, 1, 8, 16);
    std::cout << "# L seconds\n";
    for (const auto& r : rows) std::cout << r.length << " " << r.seconds << "\n";
    if (rows.size() >= 2) {
        double ratio = rows.back().seconds / rows.front().seconds;
        double expected = static_cast<double>(rows.back().length) / static_cast<double>(rows.front().length);
        std::cout << "ratio " << ratio << " (linear would be " << expected << ")\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"umamba: hybrid CNN-SSM segmentation networks"};
    app.require_subcommand(1);

    PlanArgs plan_args;
    auto* plan_cmd = app.add_subcommand("plan", "derive a network plan from a dataset manifest");
    plan_cmd->add_option("--manifest", plan_args.manifest, "dataset manifest")->required();
    plan_cmd->add_option("--out", plan_args.out, "write the plan json here");
    plan_cmd->add_option("--memory-budget", plan_args.memory_budget, "activation budget in MB");
    plan_cmd->add_option("--variant", plan_args.variant, "bot|enc|cnn");
    plan_cmd->add_option("--base-channels", plan_args.base_channels, "first-stage channels");

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    synth_cmd->add_option("--task", synth_args.task, "blobs|cells|longrange")->required();
    synth_cmd->add_option("--n", synth_args.n, "total cases");
    synth_cmd->add_option("--n-test", synth_args.n_test, "test cases (default n/5)");
    synth_cmd->add_option("--size", synth_args.size, "image extent");
    synth_cmd->add_option("--seed", synth_args.seed, "rng seed");
    synth_cmd->add_option("--out", synth_args.out, "output directory")->required();

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train a network");
    train_cmd->add_option("--manifest", train_args.manifest, "dataset manifest")->required();
    train_cmd->add_option("--plan", train_args.plan_path, "plan json (default: derive)");
    train_cmd->add_option("--variant", train_args.variant, "bot|enc|cnn");
    train_cmd->add_option("--seed", train_args.seed, "rng seed");
    train_cmd->add_option("--epochs", train_args.epochs, "training epochs");
    train_cmd->add_option("--batch", train_args.batch, "batch size (default: plan)");
    train_cmd->add_option("--base-channels", train_args.base_channels, "first-stage channels");
    train_cmd->add_option("--memory-budget", train_args.memory_budget, "activation budget in MB");
    train_cmd->add_flag("--augment", train_args.augment, "enable flips + intensity jitter");
    train_cmd->add_option("--out", train_args.out, "run directory");

    PredictArgs pred_args;
    auto* pred_cmd = app.add_subcommand("predict", "sliding-window inference");
    pred_cmd->add_option("--checkpoint", pred_args.checkpoint, "checkpoint file")->required();
    pred_cmd->add_option("--manifest", pred_args.manifest, "dataset manifest")->required();
    pred_cmd->add_option("--split", pred_args.split, "train|test");
    pred_cmd->add_option("--overlap", pred_args.overlap, "window overlap fraction");
    pred_cmd->add_flag("--plain-average", pred_args.plain_average, "disable gaussian weighting");
    pred_cmd->add_option("--out", pred_args.out, "output directory");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("evaluate", "score predictions against labels");
    eval_cmd->add_option("--manifest", eval_args.manifest, "dataset manifest")->required();
    eval_cmd->add_option("--pred", eval_args.pred, "prediction directory")->required();
    eval_cmd->add_option("--split", eval_args.split, "train|test");
    eval_cmd->add_option("--metric", eval_args.metric, "dsc,nsd | f1");
    eval_cmd->add_option("--tolerance", eval_args.tolerance, "NSD tolerance tau");
    eval_cmd->add_option("--iou", eval_args.iou, "instance match IoU threshold");
    eval_cmd->add_option("--out", eval_args.out, "write the report here");

    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient suite");

    std::vector<int64_t> bench_lengths{512, 4096};
    auto* bench_cmd = app.add_subcommand("bench-scan", "scan runtime scaling table");
    bench_cmd->add_option("--lengths", bench_lengths, "sequence lengths");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*plan_cmd) return cmd_plan(plan_args);
        if (*synth_cmd) return cmd_synth(synth_args);
        if (*train_cmd) return cmd_train(train_args);
        if (*pred_cmd) return cmd_predict(pred_args);
        if (*eval_cmd) return cmd_evaluate(eval_args);
        if (*grad_cmd) return cmd_gradcheck();
        if (*bench_cmd) return cmd_bench_scan(bench_lengths);
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}
