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
#include "umamba/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "umamba/tensor_io.hpp"

namespace umamba {

namespace fs = std::filesystem;

SynthTask synth_task_from_name(const std::string& s) {
    if (s == "blobs") return SynthTask::Blobs;
    if (s == "cells") return SynthTask::Cells;
    if (s == "longrange") return SynthTask::LongRange;
    throw IoError(cat("unknown synth task '", s, "' (expected blobs|cells|longrange)"));
}

std::string synth_task_name(SynthTask t) {
    switch (t) {
        case SynthTask::Blobs: return "blobs";
        case SynthTask::Cells: return "cells";
        case SynthTask::LongRange: return "longrange";
    }
    return "?";
}

namespace {

struct Ellipse {
    double cy, cx, ry, rx;
    double value(int64_t y, int64_t x) const {
        double dy = (static_cast<double>(y) - cy) / ry;
        double dx = (static_cast<double>(x) - cx) / rx;
        return dy * dy + dx * dx;  // <= 1 means inside
    }
};

}  // namespace

SynthCase synth_blobs_case(Rng& rng, int64_t size) {
    SynthCase out;
    out.image = Tensor::zeros({size, size}, DType::F32);
    out.label = Tensor::zeros({size, size}, DType::U8);
    out.instances = 0;
    auto img = out.image.data<float>();
    auto lab = out.label.data<uint8_t>();
    // Two foreground classes, each a union of 1-3 soft ellipses; later
    // classes paint over earlier ones.
    for (uint8_t cls = 1; cls <= 2; ++cls) {
        int nblobs = static_cast<int>(rng.randint(1, 4));
        for (int b = 0; b < nblobs; ++b) {
            Ellipse e{rng.uniform(0.2, 0.8) * size, rng.uniform(0.2, 0.8) * size,
                      rng.uniform(0.10, 0.25) * size, rng.uniform(0.10, 0.25) * size};
            for (int64_t y = 0; y < size; ++y)
                for (int64_t x = 0; x < size; ++x)
                    if (e.value(y, x) <= 1.0) lab[static_cast<size_t>(y * size + x)] = cls;
        }
    }
    // Intensity keyed to class, smooth low-frequency field plus noise.
    double fy = rng.uniform(0.5, 2.0), fx = rng.uniform(0.5, 2.0), phase = rng.uniform(0.0, 6.28);
    for (int64_t y = 0; y < size; ++y)
        for (int64_t x = 0; x < size; ++x) {
            size_t i = static_cast<size_t>(y * size + x);
            double base = 0.35 * lab[i];
            double wave = 0.08 * std::sin(fy * 6.2831853 * y / size + phase) *
                          std::cos(fx * 6.2831853 * x / size);
            img[i] = static_cast<float>(base + wave + 0.03 * rng.normal());
        }
    return out;
}

SynthCase synth_cells_case(Rng& rng, int64_t size) {
    SynthCase out;
    out.image = Tensor::zeros({size, size}, DType::F32);
    out.label = Tensor::zeros({size, size}, DType::U8);
    auto img = out.image.data<float>();
    auto lab = out.label.data<uint8_t>();
    std::vector<int32_t> inst(static_cast<size_t>(size * size), 0);

    int64_t want = rng.randint(5, 12);
    std::vector<Ellipse> cells;
    int attempts = 0;
    while (static_cast<int64_t>(cells.size()) < want && attempts < 400) {
        ++attempts;
        double r1 = rng.uniform(3.0, 7.0), r2 = rng.uniform(3.0, 7.0);
        double cy = rng.uniform(r1 + 2.0, size - r1 - 2.0);
        double cx = rng.uniform(r2 + 2.0, size - r2 - 2.0);
        bool ok = true;
        for (const auto& c : cells) {
            double dy = cy - c.cy, dx = cx - c.cx;
            double mind = std::max(r1, r2) + std::max(c.ry, c.rx) + 2.0;
            if (dy * dy + dx * dx < mind * mind) {
                ok = false;
                break;
            }
        }
        if (ok) cells.push_back({cy, cx, r1, r2});
    }
    for (size_t c = 0; c < cells.size(); ++c)
        for (int64_t y = 0; y < size; ++y)
            for (int64_t x = 0; x < size; ++x)
                if (cells[c].value(y, x) <= 1.0) inst[static_cast<size_t>(y * size + x)] = static_cast<int32_t>(c + 1);
    // Rim pixels (a 4-neighbor outside their own instance) become the
    // boundary class; the rest of the cell is interior.
    for (int64_t y = 0; y < size; ++y)
        for (int64_t x = 0; x < size; ++x) {
            size_t i = static_cast<size_t>(y * size + x);
            if (inst[i] == 0) continue;
            bool rim = false;
            const int64_t ny[4] = {y - 1, y + 1, y, y};
            const int64_t nx[4] = {x, x, x - 1, x + 1};
            for (int d = 0; d < 4 && !rim; ++d) {
                if (ny[d] < 0 || ny[d] >= size || nx[d] < 0 || nx[d] >= size)
                    rim = true;
                else if (inst[static_cast<size_t>(ny[d] * size + nx[d])] != inst[i])
                    rim = true;
            }
            lab[i] = rim ? 2 : 1;
        }
    out.instances = static_cast<int32_t>(cells.size());
    for (int64_t i = 0; i < size * size; ++i) {
        size_t ii = static_cast<size_t>(i);
        double base = lab[ii] == 1 ? 0.85 : lab[ii] == 2 ? 0.45 : 0.10;
        img[ii] = static_cast<float>(base + 0.05 * rng.normal());
    }
    return out;
}

SynthCase synth_longrange_case(Rng& rng, int64_t size, int force_cue) {
    constexpr int64_t kCue = 8;  // cue patch extent
    SynthCase out;
    out.image = Tensor::zeros({size, size}, DType::F32);
    out.label = Tensor::zeros({size, size}, DType::U8);
    out.instances = 0;
    auto img = out.image.data<float>();
    auto lab = out.label.data<uint8_t>();

    // Region field: union of 2-4 ellipses, redrawn until the area fraction is
    // balanced enough that neither polarity is trivially dominant.
    std::vector<uint8_t> region(static_cast<size_t>(size * size), 0);
    for (int attempt = 0; attempt < 50; ++attempt) {
        std::fill(region.begin(), region.end(), 0);
        int nblobs = static_cast<int>(rng.randint(2, 5));
        for (int b = 0; b < nblobs; ++b) {
            Ellipse e{rng.uniform(0.15, 0.85) * size, rng.uniform(0.15, 0.85) * size,
                      rng.uniform(0.15, 0.35) * size, rng.uniform(0.15, 0.35) * size};
            for (int64_t y = 0; y < size; ++y)
                for (int64_t x = 0; x < size; ++x)
                    if (e.value(y, x) <= 1.0) region[static_cast<size_t>(y * size + x)] = 1;
        }
        int64_t area = 0;
        for (uint8_t v : region) area += v;
        double frac = static_cast<double>(area) / static_cast<double>(size * size);
        if (frac >= 0.30 && frac <= 0.70) break;
    }

    int cue = force_cue >= 0 ? force_cue : static_cast<int>(rng.randint(0, 2));
    // Label: cue selects the polarity; by construction flipping the cue flips
    // the label of every pixel, including those >= size/2 from the cue.
    for (int64_t i = 0; i < size * size; ++i) {
        uint8_t r = region[static_cast<size_t>(i)];
        lab[static_cast<size_t>(i)] = cue ? r : static_cast<uint8_t>(1 - r);
    }
    // Image: region-keyed intensity plus noise. The cue is the ARRANGEMENT of
    // two corner patches, one bright and one dark: cue=1 puts the bright one
    // top-left, cue=0 swaps them. Every image contains exactly one of each,
    // so any position-free statistic (instance-norm means and variances, or
    // rectified filter responses pooled over space) is blind to the cue; only
    // order-aware computation along the flattened sequence can read it.
    for (int64_t y = 0; y < size; ++y)
        for (int64_t x = 0; x < size; ++x) {
            size_t i = static_cast<size_t>(y * size + x);
            img[i] = static_cast<float>((region[i] ? 0.5 : -0.5) + 0.05 * rng.normal());
        }
    for (int64_t y = 0; y < kCue; ++y)
        for (int64_t x = 0; x < kCue; ++x) {
            img[static_cast<size_t>(y * size + x)] = cue ? 1.5f : -1.5f;                  // top-left
            img[static_cast<size_t>(y * size + size - kCue + x)] = cue ? -1.5f : 1.5f;    // top-right
        }
    return out;
}

DatasetManifest synth_generate(SynthTask task, int64_t n, int64_t n_test, int64_t size, uint64_t seed,
                               const std::string& out_dir) {
    if (size < 16) throw ContractError("synth: size must be >= 16 (needs at least 2 poolings)");
    if (n < 1 || n_test < 0 || n_test >= n) throw ContractError("synth: need n >= 1 and 0 <= n_test < n");
    fs::create_directories(fs::path(out_dir) / "images");
    fs::create_directories(fs::path(out_dir) / "labels");

    DatasetManifest m;
    m.name = cat("synth_", synth_task_name(task));
    m.dimensionality = 2;
    m.modality = "synthetic";
    switch (task) {
        case SynthTask::Blobs:
            m.n_classes = 3;
            m.class_names = {"background", "organ_a", "organ_b"};
            break;
        case SynthTask::Cells:
            m.n_classes = 3;
            m.class_names = {"background", "interior", "boundary"};
            break;
        case SynthTask::LongRange:
            m.n_classes = 2;
            m.class_names = {"background", "foreground"};
            break;
    }
    m.root = out_dir;
    Rng root_rng(seed);
    for (int64_t i = 0; i < n; ++i) {
        Rng case_rng = root_rng.fork(static_cast<uint64_t>(i));
        SynthCase sc;
        switch (task) {
            case SynthTask::Blobs: sc = synth_blobs_case(case_rng, size); break;
            case SynthTask::Cells: sc = synth_cells_case(case_rng, size); break;
            case SynthTask::LongRange:
                // Alternating cue keeps the polarity classes exactly balanced.
                sc = synth_longrange_case(case_rng, size, static_cast<int>(i % 2));
                break;
        }
        char idbuf[32];
        std::snprintf(idbuf, sizeof idbuf, "case_%04lld", static_cast<long long>(i));
        DatasetCase c;
        c.id = idbuf;
        c.image = cat("images/", idbuf, ".umtn");
        c.label = cat("labels/", idbuf, ".umtn");
        c.spacing = {1.0, 1.0};
        c.split = i < n - n_test ? "train" : "test";
        write_tensor(resolve_path(out_dir, c.image), sc.image);
        write_tensor(resolve_path(out_dir, c.label), sc.label);
        m.cases.push_back(std::move(c));
    }
    m.save((fs::path(out_dir) / "manifest.json").string());
    return m;
}

}  // namespace umamba
