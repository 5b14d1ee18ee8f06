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
#include "umamba/graph.hpp"

namespace umamba {

namespace {
thread_local GradTape* g_active_tape = nullptr;
}

GradTape::GradTape() {
    prev_ = g_active_tape;
    g_active_tape = this;
}

GradTape::~GradTape() { g_active_tape = prev_; }

GradTape* GradTape::active() { return g_active_tape; }

void GradTape::record(std::vector<Tensor> inputs, Tensor output, std::function<void()> backward_fn) {
    nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(backward_fn)});
}

void GradTape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw ContractError("backward: loss must be a scalar tensor");
    if (!is_float_dtype(loss.dtype()))
        throw ContractError("backward: loss must be a float tensor");
    Tensor l = loss;
    l.ensure_grad();
    if (l.dtype() == DType::F32)
        l.grad<float>()[0] += 1.f;
    else
        l.grad<double>()[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (!it->output.has_grad()) continue;  // not on any path from the loss
        it->backward_fn();
    }
}

NoGradGuard::NoGradGuard() {
    saved_ = g_active_tape;
    g_active_tape = nullptr;
}

NoGradGuard::~NoGradGuard() { g_active_tape = saved_; }

namespace autograd {

bool should_record(const std::vector<Tensor>& inputs) {
    if (!GradTape::active()) return false;
    for (const auto& t : inputs)
        if (is_float_dtype(t.dtype()) && t.requires_grad()) return true;
    return false;
}

void record(std::vector<Tensor> inputs, Tensor output, std::function<void()> backward_fn) {
    output.set_requires_grad(true);
    GradTape::active()->record(std::move(inputs), std::move(output), std::move(backward_fn));
}

}  // namespace autograd

}  // namespace umamba
