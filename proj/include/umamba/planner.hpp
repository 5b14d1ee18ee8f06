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
#ifndef UMAMBA_PLANNER_HPP
#define UMAMBA_PLANNER_HPP

#include "umamba/dataset.hpp"
#include "umamba/network.hpp"

namespace umamba {

struct PlannerCfg {
    double memory_budget_mb = 4096.0;
    int64_t base_channels = 32;
    int64_t n_classes = 2;
    int64_t in_channels = 1;
    Variant variant = Variant::Enc;
};

/// Derives pooling counts, stage count, patch and batch size from a dataset
/// fingerprint:
///   - per-axis pooling = halvings until the extent would drop below 4,
///     capped at 7 (2-D additionally capped at the smallest axis's count);
///   - n_stages = max pooling + 1;
///   - patch = median shape rounded to the nearest multiple of 2^pooling,
///     shrunk largest-axis-first until the activation estimate fits the
///     budget at batch 2;
///   - batch = largest count >= 2 that fits the remaining budget.
/// Pure: identical fingerprints yield identical plans.
NetworkPlan plan_configuration(const DatasetFingerprint& fp, int dimensionality,
                               const PlannerCfg& cfg = {});

/// Rough activation footprint of one sample in MB (forward + backward
/// buffers); the planner's only cost model.
double estimate_activation_mb(const std::vector<int64_t>& patch, const std::vector<int>& pooling,
                              int n_stages, int64_t base_channels, int64_t max_channels);

}  // namespace umamba

#endif
