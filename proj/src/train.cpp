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
#include "umamba/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "umamba/metrics.hpp"

namespace umamba {

namespace fs = std::filesystem;

namespace {

int64_t mirror_index(int64_t i, int64_t n) {
    if (n == 1) return 0;
    int64_t period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

std::string format_log_line(const StepLog& l) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%lld %lld %.17g %.17g %.17g %.17g\n", static_cast<long long>(l.epoch),
                  static_cast<long long>(l.step), l.lr, l.loss, l.dice_term, l.ce_term);
    return buf;
}

}  // namespace

std::pair<Tensor, Tensor> crop_patch(const SegmentationSample& s, const std::vector<int64_t>& patch,
                                     const std::vector<int64_t>& origin) {
    int rankd = static_cast<int>(patch.size());
    std::vector<int64_t> extents(s.image.shape().begin() + 1, s.image.shape().end());
    std::vector<int64_t> ishape{1};
    ishape.insert(ishape.end(), patch.begin(), patch.end());
    Tensor img = Tensor::zeros(ishape, DType::F32);
    Tensor lab = Tensor::zeros(patch, DType::U8);
    int64_t vox = 1;
    for (int64_t e : patch) vox *= e;
    auto src_img = s.image.data<float>();
    auto src_lab = s.label.data<uint8_t>();
    auto dst_img = img.data<float>();
    auto dst_lab = lab.data<uint8_t>();
    auto strides = row_major_strides(extents);
    for (int64_t flat = 0; flat < vox; ++flat) {
        auto idx = unravel_index(flat, patch);
        int64_t off = 0;
        for (int a = 0; a < rankd; ++a) off += mirror_index(origin[a] + idx[a], extents[a]) * strides[a];
        dst_img[static_cast<size_t>(flat)] = src_img[static_cast<size_t>(off)];
        dst_lab[static_cast<size_t>(flat)] = src_lab[static_cast<size_t>(off)];
    }
    return {img, lab};
}

namespace {

// Picks a patch origin: uniformly random, or centered on a random foreground
// voxel when oversampling fires.
std::vector<int64_t> pick_origin(const SegmentationSample& s, const std::vector<int64_t>& patch, Rng& rng,
                                 double fg_p) {
    int rankd = static_cast<int>(patch.size());
    std::vector<int64_t> extents(s.image.shape().begin() + 1, s.image.shape().end());
    std::vector<int64_t> origin(static_cast<size_t>(rankd), 0);
    bool fg = rng.uniform() < fg_p;
    if (fg) {
        auto lab = s.label.data<uint8_t>();
        // Count foreground, then index the k-th foreground voxel.
        int64_t nfg = 0;
        for (uint8_t v : lab) nfg += v != 0;
        if (nfg > 0) {
            int64_t k = rng.randint(0, nfg);
            int64_t seen = 0, found = 0;
            for (int64_t i = 0; i < static_cast<int64_t>(lab.size()); ++i) {
                if (lab[static_cast<size_t>(i)] != 0) {
                    if (seen == k) {
                        found = i;
                        break;
                    }
                    ++seen;
                }
            }
            auto center = unravel_index(found, extents);
            for (int a = 0; a < rankd; ++a) {
                int64_t o = center[a] - patch[a] / 2;
                o = std::clamp<int64_t>(o, 0, std::max<int64_t>(0, extents[a] - patch[a]));
                origin[a] = o;
            }
            return origin;
        }
    }
    for (int a = 0; a < rankd; ++a) {
        int64_t room = extents[a] - patch[a];
        origin[a] = room > 0 ? rng.randint(0, room + 1) : 0;
    }
    return origin;
}

void flip_axis_inplace(Tensor& img, Tensor& lab, int axis /* spatial axis */) {
    // img (1, spatial...), lab (spatial...)
    std::vector<int64_t> sp(lab.shape());
    auto strides = row_major_strides(sp);
    int64_t n = lab.numel();
    auto id = img.data<float>();
    auto ld = lab.data<uint8_t>();
    for (int64_t flat = 0; flat < n; ++flat) {
        auto idx = unravel_index(flat, sp);
        if (idx[axis] * 2 >= sp[axis]) continue;  // visit each pair once
        auto midx = idx;
        midx[axis] = sp[axis] - 1 - idx[axis];
        int64_t j = 0;
        for (size_t a = 0; a < sp.size(); ++a) j += midx[a] * strides[a];
        std::swap(id[static_cast<size_t>(flat)], id[static_cast<size_t>(j)]);
        std::swap(ld[static_cast<size_t>(flat)], ld[static_cast<size_t>(j)]);
    }
}

}  // namespace

TrainResult train(Network& net, const std::vector<SegmentationSample>& dataset, TrainCfg cfg) {
    if (dataset.empty()) throw ContractError("train: empty dataset");
    const NetworkPlan& plan = net.plan();
    int rankd = plan.dimensionality;
    int64_t batch = cfg.batch_size > 0 ? cfg.batch_size : plan.batch_size;
    int64_t steps_per_epoch = (static_cast<int64_t>(dataset.size()) + batch - 1) / batch;
    Rng rng(cfg.seed);
    OptimCfg oc = cfg.optim;
    oc.epochs = cfg.epochs;  // the poly schedule runs over the training length
    SgdOptimizer optim(net.parameters(), oc);
    TrainResult result;
    std::string log_text;
    bool write_files = !cfg.out_dir.empty();
    std::ofstream log_file;
    if (write_files) {
        fs::create_directories(cfg.out_dir);
        // append-only step log, streamed as training progresses
        log_file.open(fs::path(cfg.out_dir) / "loss_log.txt", std::ios::trunc);
    }

    auto save_ck = [&](const std::string& name, int64_t epoch) {
        if (!write_files) return;
        Checkpoint ck = Checkpoint::capture(net, epoch, rng.serialize(), optim.state());
        ck.save((fs::path(cfg.out_dir) / name).string());
    };

    for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (int64_t step = 0; step < steps_per_epoch; ++step) {
            // Assemble a batch of patches.
            std::vector<int64_t> bshape{batch, plan.in_channels};
            bshape.insert(bshape.end(), plan.patch_size.begin(), plan.patch_size.end());
            std::vector<int64_t> lshape{batch};
            lshape.insert(lshape.end(), plan.patch_size.begin(), plan.patch_size.end());
            Tensor bimg = Tensor::zeros(bshape, DType::F32);
            Tensor blab = Tensor::zeros(lshape, DType::U8);
            int64_t patch_vox = 1;
            for (int64_t e : plan.patch_size) patch_vox *= e;
            for (int64_t b = 0; b < batch; ++b) {
                const auto& sample = dataset[static_cast<size_t>(rng.randint(0, static_cast<int64_t>(dataset.size())))];
                auto origin = pick_origin(sample, plan.patch_size, rng, cfg.fg_oversample_p);
                auto [img, lab] = crop_patch(sample, plan.patch_size, origin);
                if (cfg.augment_flips)
                    for (int a = 0; a < rankd; ++a)
                        if (rng.uniform() < 0.5) flip_axis_inplace(img, lab, a);
                if (cfg.augment_intensity) {
                    float mul = static_cast<float>(rng.uniform(0.9, 1.1));
                    float add_v = static_cast<float>(rng.uniform(-0.1, 0.1));
                    for (auto& v : img.data<float>()) v = v * mul + add_v;
                }
                std::copy(img.data<float>().begin(), img.data<float>().end(),
                          bimg.data<float>().begin() + b * plan.in_channels * patch_vox);
                std::copy(lab.data<uint8_t>().begin(), lab.data<uint8_t>().end(),
                          blab.data<uint8_t>().begin() + b * patch_vox);
            }

            GradTape tape;
            Tensor probs = net.forward(bimg);
            LossValue lv = dice_ce_loss(probs, blab, cfg.loss);
            double loss = lv.total.item();
            if (!std::isfinite(loss)) {
                save_ck("checkpoint_lastgood.umck", epoch);
                throw NumericError(cat("train: non-finite loss at epoch ", epoch, " step ", step,
                                       "; last good checkpoint retained"));
            }
            optim.zero_grads();
            tape.backward(lv.total);
            optim.step(epoch);
            net.post_step_clamp();

            StepLog l{epoch, step, poly_lr(optim.cfg(), epoch), loss, lv.dice_term, lv.ce_term};
            result.log.push_back(l);
            std::string line = format_log_line(l);
            if (log_file.is_open()) log_file << line << std::flush;
            log_text += std::move(line);
            epoch_loss += loss;
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(steps_per_epoch));
        if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 && epoch + 1 < cfg.epochs)
            save_ck(cat("checkpoint_epoch", epoch + 1, ".umck"), epoch + 1);
    }
    result.final_checkpoint = Checkpoint::capture(net, cfg.epochs, rng.serialize(), optim.state());
    if (write_files) result.final_checkpoint.save((fs::path(cfg.out_dir) / "checkpoint_final.umck").string());
    result.loss_log_text = std::move(log_text);
    return result;
}

double evaluate_mean_dsc(const Network& net, const std::vector<SegmentationSample>& samples) {
    if (samples.empty()) throw ContractError("evaluate: no samples");
    NoGradGuard no_grad;
    double total = 0.0;
    int64_t count = 0;
    for (const auto& s : samples) {
        Tensor pred = net.predict_labels_sliding(s.image);
        for (int cls = 1; cls < net.plan().n_classes; ++cls) {
            total += dsc_class(pred, s.label, cls);
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

}  // namespace umamba
