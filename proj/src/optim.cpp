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
#include "umamba/optim.hpp"

#include <cmath>

#include "op_kernels.hpp"

namespace umamba {

using detail::dispatch_float;

double poly_lr(const OptimCfg& cfg, int64_t epoch) {
    double frac = 1.0 - static_cast<double>(epoch) / static_cast<double>(cfg.epochs);
    if (frac <= 0.0) return 0.0;
    return cfg.lr0 * std::pow(frac, cfg.poly_exponent);
}

SgdOptimizer::SgdOptimizer(ParamList params, OptimCfg cfg) : params_(std::move(params)), cfg_(cfg) {
    velocity_.reserve(params_.items.size());
    for (auto& [name, t] : params_.items) velocity_.push_back(Tensor::zeros(t.shape(), t.dtype()));
}

void SgdOptimizer::step(int64_t epoch) {
    double lr = poly_lr(cfg_, epoch);
    for (size_t i = 0; i < params_.items.size(); ++i) {
        auto& [name, p] = params_.items[i];
        Tensor param = p;
        if (!param.has_grad()) continue;  // unused parameter this step
        Tensor vel = velocity_[i];
        dispatch_float(param.dtype(), [&](auto tag) {
            using T = decltype(tag);
            T* pv = param.data<T>().data();
            const T* gv = param.grad<T>().data();
            T* vv = vel.data<T>().data();
            int64_t n = param.numel();
            const double mu = cfg_.momentum;
            const double wd = cfg_.weight_decay;
            for (int64_t j = 0; j < n; ++j) {
                double g = static_cast<double>(gv[j]);
                if (!std::isfinite(g))
                    throw NumericError(cat("sgd: non-finite gradient in parameter '", name, "' at element ", j));
                g += wd * static_cast<double>(pv[j]);
                double v = mu * static_cast<double>(vv[j]) + g;
                vv[j] = static_cast<T>(v);
                double update = cfg_.nesterov ? g + mu * v : v;
                pv[j] = static_cast<T>(static_cast<double>(pv[j]) - lr * update);
            }
        });
    }
}

void SgdOptimizer::zero_grads() {
    for (auto& [name, t] : params_.items) {
        Tensor tt = t;
        tt.zero_grad();
    }
}

std::vector<std::pair<std::string, Tensor>> SgdOptimizer::state() const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (size_t i = 0; i < params_.items.size(); ++i)
        out.emplace_back(params_.items[i].first, velocity_[i].clone());
    return out;
}

void SgdOptimizer::load_state(const std::vector<std::pair<std::string, Tensor>>& state) {
    if (state.size() != velocity_.size())
        throw IoError(cat("sgd: state has ", state.size(), " buffers, optimizer has ", velocity_.size()));
    for (size_t i = 0; i < state.size(); ++i) {
        if (state[i].first != params_.items[i].first)
            throw IoError(cat("sgd: state order mismatch at ", i));
        Tensor dst = velocity_[i];
        const Tensor& src = state[i].second;
        if (src.shape() != dst.shape()) throw IoError(cat("sgd: state shape mismatch for ", state[i].first));
        int64_t n = dst.numel();
        for (int64_t j = 0; j < n; ++j) dst.set_flat(j, src.get_flat(j));
    }
}

}  // namespace umamba
