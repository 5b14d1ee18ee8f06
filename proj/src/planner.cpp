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
#include "umamba/planner.hpp"

#include <algorithm>
#include <cmath>

namespace umamba {

namespace {

constexpr int kMaxPooling = 7;
constexpr int64_t kMinBottleneck = 4;  // stop halving before falling below this

// Halve while the halved extent stays >= 4; divisibility of the final patch
// is handled by rounding afterwards.
int poolings_for_extent(int64_t extent) {
    int p = 0;
    while (p < kMaxPooling && static_cast<double>(extent) / std::pow(2.0, p + 1) >= kMinBottleneck) ++p;
    return p;
}

int64_t round_to_multiple(int64_t v, int64_t m) {
    if (m <= 1) return std::max<int64_t>(v, 1);
    int64_t lo = (v / m) * m;
    int64_t hi = lo + m;
    if (lo == 0) return hi;
    return (v - lo) < (hi - v) ? lo : hi;  // nearest, ties up via strict <
}

}  // namespace

double estimate_activation_mb(const std::vector<int64_t>& patch, const std::vector<int>& pooling,
                              int n_stages, int64_t base_channels, int64_t max_channels) {
    // Per stage: channels * voxels floats for the encoder, mirrored by the
    // decoder, with a x3 factor for gradients and workspaces.
    double total = 0.0;
    std::vector<int64_t> cur = patch;
    for (int s = 0; s < n_stages; ++s) {
        if (s > 0)
            for (size_t a = 0; a < cur.size(); ++a)
                if (s <= pooling[a]) cur[a] /= 2;
        double vox = 1.0;
        for (int64_t e : cur) vox *= static_cast<double>(e);
        double ch = static_cast<double>(std::min(base_channels << s, max_channels));
        total += ch * vox;
    }
    return total * 2.0 * 3.0 * 4.0 / (1024.0 * 1024.0);  // enc+dec, grad factor, f32 bytes
}

NetworkPlan plan_configuration(const DatasetFingerprint& fp, int dimensionality, const PlannerCfg& cfg) {
    if (fp.median_shape.size() != static_cast<size_t>(dimensionality))
        throw PlanError(cat("planner: fingerprint rank ", fp.median_shape.size(), " vs dimensionality ",
                            dimensionality));
    NetworkPlan plan;
    plan.dimensionality = dimensionality;
    plan.base_channels = cfg.base_channels;
    plan.n_classes = cfg.n_classes;
    plan.in_channels = cfg.in_channels;
    plan.variant = cfg.variant;
    size_t axes = fp.median_shape.size();

    std::vector<int64_t> patch(axes);
    std::vector<int> pooling(axes);
    for (size_t a = 0; a < axes; ++a) {
        int64_t extent = fp.median_shape[a];
        if (extent < 8)
            plan.warnings.push_back(cat("axis ", a, " extent ", extent, " allows no pooling"));
        pooling[a] = poolings_for_extent(extent);
    }
    // 2-D anisotropy cap: no axis pools deeper than the smallest axis.
    if (dimensionality == 2) {
        int cap = *std::min_element(pooling.begin(), pooling.end());
        for (auto& p : pooling) p = std::min(p, cap);
    }
    for (size_t a = 0; a < axes; ++a)
        patch[a] = round_to_multiple(fp.median_shape[a], int64_t(1) << pooling[a]);

    double budget = cfg.memory_budget_mb;
    int n_stages = *std::max_element(pooling.begin(), pooling.end()) + 1;
    // Shrink the largest axis one multiple at a time until a batch of 2 fits.
    while (true) {
        n_stages = *std::max_element(pooling.begin(), pooling.end()) + 1;
        double per_sample = estimate_activation_mb(patch, pooling, n_stages, plan.base_channels,
                                                   plan.effective_max_channels());
        if (2.0 * per_sample <= budget) break;
        size_t largest = 0;
        for (size_t a = 1; a < axes; ++a)
            if (patch[a] > patch[largest]) largest = a;
        int64_t step = int64_t(1) << pooling[largest];
        if (patch[largest] - step < kMinBottleneck) {
            plan.warnings.push_back("memory budget too small; smallest feasible patch kept");
            break;
        }
        patch[largest] -= step;
        // The shrunken extent may no longer support its pooling depth.
        pooling[largest] = std::min(pooling[largest], poolings_for_extent(patch[largest]));
        if (dimensionality == 2) {
            int cap = *std::min_element(pooling.begin(), pooling.end());
            for (auto& p : pooling) p = std::min(p, cap);
        }
    }
    double per_sample = estimate_activation_mb(patch, pooling, n_stages, plan.base_channels,
                                               plan.effective_max_channels());
    int64_t batch = per_sample > 0 ? static_cast<int64_t>(budget / per_sample) : 2;
    plan.batch_size = std::clamp<int64_t>(batch, 2, 64);

    plan.patch_size = patch;
    plan.poolings_per_axis = pooling;
    plan.n_stages = n_stages;
    plan.validate();
    return plan;
}

}  // namespace umamba
