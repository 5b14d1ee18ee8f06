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
#ifndef UMAMBA_GRAPH_HPP
#define UMAMBA_GRAPH_HPP

#include <functional>
#include <vector>

#include "umamba/tensor.hpp"

namespace umamba {

/// Append-only record of executed primitives. While a tape is active, every
/// primitive whose inputs require grad appends one node holding the tensors it
/// needs for its backward rule. backward() replays the nodes once, in reverse
/// insertion order, accumulating (+=) into input gradients.
class GradTape {
public:
    GradTape();
    ~GradTape();
    GradTape(const GradTape&) = delete;
    GradTape& operator=(const GradTape&) = delete;

    static GradTape* active();

    void record(std::vector<Tensor> inputs, Tensor output, std::function<void()> backward_fn);

    /// loss must be a scalar float tensor reachable from the recorded nodes.
    void backward(const Tensor& loss);

    size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    struct Node {
        std::vector<Tensor> inputs;
        Tensor output;
        std::function<void()> backward_fn;
    };
    std::vector<Node> nodes_;
    GradTape* prev_ = nullptr;
};

/// Temporarily disables recording (inference inside a training scope).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    GradTape* saved_;
};

namespace autograd {

/// True when an op should record itself: a tape is active and some float
/// input requires grad.
bool should_record(const std::vector<Tensor>& inputs);

/// Marks output.requires_grad and appends the node when recording applies.
void record(std::vector<Tensor> inputs, Tensor output, std::function<void()> backward_fn);

}  // namespace autograd

}  // namespace umamba

#endif
