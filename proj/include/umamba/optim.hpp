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
#ifndef UMAMBA_OPTIM_HPP
#define UMAMBA_OPTIM_HPP

#include "umamba/blocks.hpp"

namespace umamba {

struct OptimCfg {
    double lr0 = 0.01;
    double momentum = 0.99;
    bool nesterov = true;
    double weight_decay = 3e-5;
    double poly_exponent = 0.9;
    int64_t epochs = 1000;
};

/// lr(e) = lr0 * (1 - e/epochs)^poly_exponent, clamped at 0.
double poly_lr(const OptimCfg& cfg, int64_t epoch);

/// SGD with (optionally Nesterov) momentum:
///   g = grad + wd*p;  v = mu*v + g;  p -= lr * (nesterov ? g + mu*v : v)
class SgdOptimizer {
public:
    SgdOptimizer(ParamList params, OptimCfg cfg);

    /// One update using poly_lr(cfg, epoch). Throws NumericError naming the
    /// parameter when a gradient is not finite.
    void step(int64_t epoch);
    void zero_grads();

    const OptimCfg& cfg() const { return cfg_; }
    /// Momentum buffers (named like their parameters) for checkpointing.
    std::vector<std::pair<std::string, Tensor>> state() const;
    void load_state(const std::vector<std::pair<std::string, Tensor>>& state);

private:
    ParamList params_;
    std::vector<Tensor> velocity_;
    OptimCfg cfg_;
};

}  // namespace umamba

#endif
