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
#ifndef UMAMBA_LOSS_HPP
#define UMAMBA_LOSS_HPP

#include "umamba/ops.hpp"

namespace umamba {

struct LossCfg {
    double dice_smooth = 1e-5;
    // The compound loss is always dice + ce with unit coefficients.
};

struct LossValue {
    Tensor total;      // scalar, differentiable w.r.t. probs
    double dice_term;  // for logging; total == dice_term + ce_term exactly
    double ce_term;
};

/// Soft Dice (batch-pooled per class over all samples and voxels) plus mean
/// cross-entropy, both computed from class probabilities.
///   dice = 1 - mean_k (2*sum(p_k*t_k) + s) / (sum(p_k) + sum(t_k) + s)
///   ce   = mean_vox -log p[target]
/// probs: (B, K, spatial...) float; target: (B, spatial...) u8 labels < K.
LossValue dice_ce_loss(const Tensor& probs, const Tensor& target, const LossCfg& cfg = {});

}  // namespace umamba

#endif
