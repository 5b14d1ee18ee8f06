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
#include "umamba/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "umamba/tensor_io.hpp"

namespace umamba {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string resolve_path(const std::string& root, const std::string& rel) {
    fs::path p(rel);
    if (p.is_absolute() || root.empty()) return rel;
    return (fs::path(root) / p).string();
}

std::vector<const DatasetCase*> DatasetManifest::split_cases(const std::string& split) const {
    std::vector<const DatasetCase*> out;
    for (const auto& c : cases)
        if (c.split == split) out.push_back(&c);
    return out;
}

std::string DatasetManifest::to_json() const {
    json j;
    j["name"] = name;
    j["dimensionality"] = dimensionality;
    j["modality"] = modality;
    j["n_classes"] = n_classes;
    j["class_names"] = class_names;
    json arr = json::array();
    for (const auto& c : cases) {
        json jc;
        jc["id"] = c.id;
        jc["image"] = c.image;
        jc["label"] = c.label;
        jc["spacing"] = c.spacing;
        jc["split"] = c.split;
        arr.push_back(jc);
    }
    j["cases"] = arr;
    return j.dump(2) + "\n";
}

DatasetManifest DatasetManifest::from_json(const std::string& text, const std::string& root_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw IoError(cat("manifest: unparseable json: ", e.what()));
    }
    DatasetManifest m;
    m.root = root_dir;
    try {
        m.name = j.at("name").get<std::string>();
        m.dimensionality = j.at("dimensionality").get<int>();
        m.modality = j.at("modality").get<std::string>();
        m.n_classes = j.at("n_classes").get<int64_t>();
        m.class_names = j.at("class_names").get<std::vector<std::string>>();
        for (const auto& jc : j.at("cases")) {
            DatasetCase c;
            c.id = jc.at("id").get<std::string>();
            c.image = jc.at("image").get<std::string>();
            c.label = jc.at("label").get<std::string>();
            c.spacing = jc.at("spacing").get<std::vector<double>>();
            c.split = jc.at("split").get<std::string>();
            m.cases.push_back(std::move(c));
        }
    } catch (const json::exception& e) {
        throw IoError(cat("manifest: missing or mistyped field: ", e.what()));
    }
    return m;
}

DatasetManifest DatasetManifest::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError(cat("manifest: cannot open ", path));
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return from_json(text, fs::path(path).parent_path().string());
}

void DatasetManifest::save(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError(cat("manifest: cannot write ", path));
    f << to_json();
}

void DatasetManifest::validate(bool check_files) const {
    if (dimensionality != 2 && dimensionality != 3)
        throw IoError(cat("manifest: dimensionality ", dimensionality));
    if (n_classes < 2) throw IoError("manifest: n_classes must be >= 2");
    if (static_cast<int64_t>(class_names.size()) != n_classes)
        throw IoError(cat("manifest: ", class_names.size(), " class names for ", n_classes, " classes"));
    if (cases.empty()) throw IoError("manifest: no cases");
    for (const auto& c : cases) {
        if (c.split != "train" && c.split != "test")
            throw IoError(cat("manifest: case ", c.id, ": bad split '", c.split, "'"));
        if (static_cast<int>(c.spacing.size()) != dimensionality)
            throw IoError(cat("manifest: case ", c.id, ": spacing rank ", c.spacing.size()));
        for (double s : c.spacing)
            if (s <= 0) throw IoError(cat("manifest: case ", c.id, ": nonpositive spacing"));
        if (!check_files) continue;
        Tensor img, lab;
        try {
            img = read_tensor(resolve_path(root, c.image));
            lab = read_tensor(resolve_path(root, c.label));
        } catch (const Error& e) {
            throw IoError(cat("manifest: case ", c.id, ": ", e.what()));
        }
        if (img.rank() != dimensionality)
            throw IoError(cat("manifest: case ", c.id, ": image rank ", img.rank()));
        if (lab.dtype() != DType::U8 || lab.shape() != img.shape())
            throw IoError(cat("manifest: case ", c.id, ": label grid mismatch"));
        for (uint8_t v : lab.data<uint8_t>())
            if (v >= n_classes) throw IoError(cat("manifest: case ", c.id, ": label value ", int(v),
                                                  " out of range [0,", n_classes, ")"));
    }
}

namespace {

int64_t lower_median_i(std::vector<int64_t> v) {
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
}

double lower_median_d(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
}

double percentile(std::vector<double>& sorted, double q) {
    // linear interpolation between order statistics
    if (sorted.empty()) return 0.0;
    double pos = q / 100.0 * (static_cast<double>(sorted.size()) - 1.0);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

DatasetFingerprint fingerprint(const DatasetManifest& manifest) {
    auto train = manifest.split_cases("train");
    if (train.empty()) throw IoError("fingerprint: no training cases");
    DatasetFingerprint fp;
    int d = manifest.dimensionality;
    std::vector<std::vector<int64_t>> shapes(static_cast<size_t>(d));
    std::vector<std::vector<double>> spacings(static_cast<size_t>(d));
    std::vector<double> samples;
    for (const auto* c : train) {
        Tensor img;
        try {
            img = read_tensor(resolve_path(manifest.root, c->image));
        } catch (const Error& e) {
            throw IoError(cat("fingerprint: case ", c->id, ": ", e.what()));
        }
        if (img.rank() != d) throw IoError(cat("fingerprint: case ", c->id, ": rank ", img.rank()));
        for (int a = 0; a < d; ++a) {
            shapes[static_cast<size_t>(a)].push_back(img.shape()[a]);
            spacings[static_cast<size_t>(a)].push_back(c->spacing[static_cast<size_t>(a)]);
        }
        // Stride-sample up to ~100k voxels per case; deterministic.
        int64_t n = img.numel();
        int64_t stride = std::max<int64_t>(1, n / 100000);
        for (int64_t i = 0; i < n; i += stride) samples.push_back(img.get_flat(i));
    }
    for (int a = 0; a < d; ++a) {
        fp.median_shape.push_back(lower_median_i(shapes[static_cast<size_t>(a)]));
        fp.median_spacing.push_back(lower_median_d(spacings[static_cast<size_t>(a)]));
    }
    std::sort(samples.begin(), samples.end());
    fp.intensity_p005 = percentile(samples, 0.5);
    fp.intensity_p995 = percentile(samples, 99.5);
    double sum = 0.0, sum2 = 0.0;
    int64_t cnt = 0;
    for (double v : samples) {
        double c = std::clamp(v, fp.intensity_p005, fp.intensity_p995);
        sum += c;
        sum2 += c * c;
        ++cnt;
    }
    fp.intensity_mean = sum / static_cast<double>(cnt);
    double var = sum2 / static_cast<double>(cnt) - fp.intensity_mean * fp.intensity_mean;
    fp.intensity_sd = var > 1e-12 ? std::sqrt(var) : 1.0;
    return fp;
}

SegmentationSample load_sample(const DatasetManifest& manifest, const DatasetCase& c,
                               const DatasetFingerprint& fp) {
    SegmentationSample s;
    s.id = c.id;
    s.spacing = c.spacing;
    Tensor img, lab;
    try {
        img = read_tensor(resolve_path(manifest.root, c.image));
        lab = read_tensor(resolve_path(manifest.root, c.label));
    } catch (const Error& e) {
        throw IoError(cat("load: case ", c.id, ": ", e.what()));
    }
    if (lab.dtype() != DType::U8) throw IoError(cat("load: case ", c.id, ": label must be u8"));
    if (img.dtype() == DType::F64) img = img.astype(DType::F32);
    if (img.dtype() != DType::F32) throw IoError(cat("load: case ", c.id, ": image must be float"));
    int64_t n = img.numel();
    auto data = img.data<float>();
    if (manifest.modality == "CT") {
        float lo = static_cast<float>(fp.intensity_p005), hi = static_cast<float>(fp.intensity_p995);
        float mu = static_cast<float>(fp.intensity_mean), sd = static_cast<float>(fp.intensity_sd);
        for (int64_t i = 0; i < n; ++i) data[i] = (std::clamp(data[i], lo, hi) - mu) / sd;
    } else {
        double sum = 0.0, sum2 = 0.0;
        for (int64_t i = 0; i < n; ++i) {
            sum += data[i];
            sum2 += static_cast<double>(data[i]) * data[i];
        }
        double mu = sum / static_cast<double>(n);
        double var = sum2 / static_cast<double>(n) - mu * mu;
        double sd = var > 1e-12 ? std::sqrt(var) : 1.0;
        for (int64_t i = 0; i < n; ++i) data[i] = static_cast<float>((data[i] - mu) / sd);
    }
    std::vector<int64_t> with_channel{1};
    with_channel.insert(with_channel.end(), img.shape().begin(), img.shape().end());
    Tensor timg = Tensor::zeros(with_channel, DType::F32);
    std::copy(data.begin(), data.end(), timg.data<float>().begin());
    s.image = timg;
    s.label = lab;
    return s;
}

std::vector<SegmentationSample> load_samples(const DatasetManifest& manifest, const std::string& split,
                                             const DatasetFingerprint& fp) {
    std::vector<SegmentationSample> out;
    for (const auto* c : manifest.split_cases(split)) out.push_back(load_sample(manifest, *c, fp));
    return out;
}

}  // namespace umamba
