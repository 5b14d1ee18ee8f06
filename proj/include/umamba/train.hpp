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
#ifndef UMAMBA_TRAIN_HPP
#define UMAMBA_TRAIN_HPP

#include "umamba/checkpoint.hpp"
#include "umamba/dataset.hpp"
#include "umamba/loss.hpp"
#include "umamba/optim.hpp"

namespace umamba {

struct TrainCfg {
    int64_t epochs = 50;
    int64_t batch_size = 0;  // 0 -> plan's batch size
    uint64_t seed = 1;
    double fg_oversample_p = 0.33;
    bool augment_flips = false;
    bool augment_intensity = false;
    int64_t checkpoint_every = 0;  // epochs; 0 -> final only
    std::string out_dir;           // empty -> nothing written
    LossCfg loss;
    OptimCfg optim;
};

struct StepLog {
    int64_t epoch, step;
    double lr, loss, dice_term, ce_term;
};

struct TrainResult {
    std::vector<StepLog> log;
    std::vector<double> epoch_loss;  // mean total loss per epoch
    Checkpoint final_checkpoint;
    std::string loss_log_text;  // exact text also written to loss_log.txt
};

/// Deterministic given cfg.seed: patch sampling, augmentation and parameter
/// initialization all flow from one seeded generator. Oversamples
/// foreground-containing patches with probability cfg.fg_oversample_p. A
/// non-finite loss aborts with NumericError after writing the last good
/// checkpoint (checkpoint_lastgood.umck) when out_dir is set.
TrainResult train(Network& net, const std::vector<SegmentationSample>& dataset, TrainCfg cfg);

/// Mean foreground DSC of full-image sliding predictions over `samples`.
double evaluate_mean_dsc(const Network& net, const std::vector<SegmentationSample>& samples);

/// Extracts the patch with the given origin (clamped); reflect-pads images
/// smaller than the patch. Exposed for tests.
std::pair<Tensor, Tensor> crop_patch(const SegmentationSample& s, const std::vector<int64_t>& patch,
                                     const std::vector<int64_t>& origin);

}  // namespace umamba

#endif
