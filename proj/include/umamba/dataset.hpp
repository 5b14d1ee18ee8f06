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
#ifndef UMAMBA_DATASET_HPP
#define UMAMBA_DATASET_HPP

#include <optional>
#include <string>
#include <vector>

#include "umamba/tensor.hpp"

namespace umamba {

struct DatasetCase {
    std::string id;
    std::string image;  // path to a UMTN float tensor (spatial...)
    std::string label;  // path to a UMTN u8 tensor (same spatial shape)
    std::vector<double> spacing;
    std::string split;  // "train" | "test"
};

struct DatasetManifest {
    std::string name;
    int dimensionality = 2;
    std::string modality;  // "CT" selects global clipped z-score normalization
    int64_t n_classes = 2;
    std::vector<std::string> class_names;
    std::vector<DatasetCase> cases;
    std::string root;  // directory that relative case paths resolve against

    std::vector<const DatasetCase*> split_cases(const std::string& split) const;
    std::string to_json() const;
    static DatasetManifest from_json(const std::string& text, const std::string& root_dir);
    static DatasetManifest load(const std::string& path);
    void save(const std::string& path) const;

    /// Existence, parseability, label-range and spacing checks. Throws with
    /// the offending case id.
    void validate(bool check_files = true) const;
};

struct SegmentationSample {
    std::string id;
    Tensor image;  // (1, spatial...) float32, normalized when loaded via load_samples
    Tensor label;  // (spatial...) u8
    std::vector<double> spacing;
};

struct DatasetFingerprint {
    std::vector<int64_t> median_shape;
    std::vector<double> median_spacing;
    double intensity_p005 = 0.0;  // 0.5 percentile
    double intensity_p995 = 0.0;  // 99.5 percentile
    double intensity_mean = 0.0;  // of clipped values
    double intensity_sd = 1.0;
};

/// Computed from the train split only; deterministic.
DatasetFingerprint fingerprint(const DatasetManifest& manifest);

/// Loads and normalizes one case. CT modality: clip to the fingerprint
/// percentiles then global z-score; anything else: per-image z-score.
SegmentationSample load_sample(const DatasetManifest& manifest, const DatasetCase& c,
                               const DatasetFingerprint& fp);
std::vector<SegmentationSample> load_samples(const DatasetManifest& manifest, const std::string& split,
                                             const DatasetFingerprint& fp);

std::string resolve_path(const std::string& root, const std::string& rel);

}  // namespace umamba

#endif
