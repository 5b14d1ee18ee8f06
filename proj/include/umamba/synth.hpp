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
#ifndef UMAMBA_SYNTH_HPP
#define UMAMBA_SYNTH_HPP

#include "umamba/dataset.hpp"

namespace umamba {

enum class SynthTask { Blobs, Cells, LongRange };

SynthTask synth_task_from_name(const std::string& s);
std::string synth_task_name(SynthTask t);

struct SynthCase {
    Tensor image;       // (size, size) f32
    Tensor label;       // (size, size) u8
    int32_t instances;  // cells task only
};

/// Single-case generators (deterministic given the rng state).
///   blobs: smooth multi-class organ-like regions (3 classes).
///   cells: scattered elliptical instances rendered as
///          {background, interior, boundary}; instance count reported.
///   longrange: a zero-mean checkerboard cue in the top-left corner selects
///          whether the textured region or its complement is foreground, so
///          labels far from the corner depend on the corner contents. The
///          cue pattern has identical mean and variance for both polarities.
SynthCase synth_blobs_case(Rng& rng, int64_t size);
SynthCase synth_cells_case(Rng& rng, int64_t size);
SynthCase synth_longrange_case(Rng& rng, int64_t size, int force_cue = -1);

/// Writes n cases (n_test of them in the test split) plus manifest.json under
/// out_dir; byte-identical across runs for a fixed seed.
DatasetManifest synth_generate(SynthTask task, int64_t n, int64_t n_test, int64_t size, uint64_t seed,
                               const std::string& out_dir);

}  // namespace umamba

#endif
