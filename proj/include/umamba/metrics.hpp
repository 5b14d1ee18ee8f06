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
#ifndef UMAMBA_METRICS_HPP
#define UMAMBA_METRICS_HPP

#include <string>
#include <vector>

#include "umamba/tensor.hpp"

namespace umamba {

/// Dice similarity 2|P^G| / (|P|+|G|) between binary masks (nonzero = in).
/// Both masks empty -> 1.0.
double dsc(const Tensor& pred, const Tensor& gt);

/// Per-class wrapper: voxels equal to `cls` form the mask.
double dsc_class(const Tensor& pred, const Tensor& gt, int cls);

/// Normalized surface distance at tolerance tau (physical units when spacing
/// given, else voxels): the fraction of boundary voxels of each mask within
/// tau of the other's boundary, symmetrized. Boundary voxels are mask voxels
/// with a face neighbor outside the mask (out-of-image counts as outside).
/// Both empty -> 1.0; exactly one empty -> 0.0. Exhaustive nearest-boundary
/// search (desk scale).
double nsd(const Tensor& pred, const Tensor& gt, double tau,
           const std::vector<double>& spacing = {});
double nsd_class(const Tensor& pred, const Tensor& gt, int cls, double tau,
                 const std::vector<double>& spacing = {});

/// 2-D instance decoding of a {0: background, 1: interior, 2: boundary} map:
/// 4-connected components of the interior class, then each boundary pixel
/// joins the nearest component within `assign_radius` (Euclidean; ties to the
/// lower label). Components smaller than min_size (before boundary
/// assignment) are dropped. Returns labels 0 (none), 1..n.
struct InstanceMap {
    std::vector<int32_t> labels;
    std::vector<int64_t> shape;
    int32_t count = 0;
};
InstanceMap instances_from_semantic(const Tensor& semantic, int64_t min_size = 4, double assign_radius = 3.0);

struct F1Result {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int64_t tp = 0, fp = 0, fn = 0;
};

/// Greedy one-to-one matching by descending IoU; a pair matches iff
/// IoU >= iou_threshold. Both maps empty -> precision = recall = f1 = 1.
F1Result f1_instance(const InstanceMap& pred, const InstanceMap& gt, double iou_threshold = 0.5);

// ---- evaluation reports ------------------------------------------------------

struct SemanticCaseRow {
    std::string case_id;
    int cls = 0;
    double dsc = 0.0;
    double nsd = 0.0;
};

struct InstanceCaseRow {
    std::string case_id;
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

/// Per-case, per-class scores plus mean +/- sd aggregates, serialized as
/// canonical text (one row per line, stable field order and formatting).
struct EvalReport {
    bool instance_task = false;
    std::vector<SemanticCaseRow> semantic_rows;
    std::vector<InstanceCaseRow> instance_rows;

    double mean_dsc() const;
    double mean_nsd() const;
    double mean_f1() const;
    std::string to_text() const;
};

}  // namespace umamba

#endif
