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
#ifndef UMAMBA_GRADCHECK_HPP
#define UMAMBA_GRADCHECK_HPP

#include <functional>
#include <string>
#include <vector>

#include "umamba/tensor.hpp"

namespace umamba {

/// Central finite-difference check (step 1e-5, float64): runs the tape once
/// for analytic gradients of sum(forward()), then perturbs every element of
/// every tensor in `wrt` and compares. Returns the worst relative error
/// (|fd - analytic| / max(1, |fd|, |analytic|)). The FD side only ever calls
/// forward, so it is independent of the backward rules it audits.
double gradcheck_max_rel_err(const std::function<Tensor()>& forward, std::vector<Tensor> wrt,
                             double step = 1e-5);

struct GradCheckEntry {
    std::string name;
    double max_rel_err;
    bool ok;  // max_rel_err <= 1e-4
};

/// The full suite: every differentiable primitive plus the composed Mamba
/// block, U-Mamba block and dice+cross-entropy loss, on small f64 tensors.
std::vector<GradCheckEntry> run_gradient_suite();

}  // namespace umamba

#endif
