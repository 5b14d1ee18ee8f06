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
#include "umamba/gradcheck.hpp"

#include <cmath>

#include "umamba/blocks.hpp"
#include "umamba/graph.hpp"
#include "umamba/loss.hpp"
#include "umamba/ops.hpp"
#include "umamba/ssm.hpp"

namespace umamba {

double gradcheck_max_rel_err(const std::function<Tensor()>& forward, std::vector<Tensor> wrt, double step) {
    {
        GradTape tape;
        Tensor loss = sum(forward());
        for (auto& t : wrt) {
            t.ensure_grad();
            t.zero_grad();
        }
        tape.backward(loss);
    }
    double worst = 0.0;
    for (auto& t : wrt) {
        int64_t n = t.numel();
        for (int64_t i = 0; i < n; ++i) {
            double saved = t.get_flat(i);
            t.set_flat(i, saved + step);
            double up = sum(forward()).item();
            t.set_flat(i, saved - step);
            double dn = sum(forward()).item();
            t.set_flat(i, saved);
            double fd = (up - dn) / (2.0 * step);
            double an = t.grad_get_flat(i);
            double err = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
            worst = std::max(worst, err);
        }
    }
    return worst;
}

namespace {

Tensor randn(std::vector<int64_t> shape, Rng& rng, double sd = 1.0, bool grad = true) {
    Tensor t = Tensor::zeros(std::move(shape), DType::F64);
    fill_normal(t, rng, 0.0, sd);
    if (grad) t.set_requires_grad(true);
    return t;
}

}  // namespace

std::vector<GradCheckEntry> run_gradient_suite() {
    std::vector<GradCheckEntry> out;
    auto push = [&out](const std::string& name, double err) { out.push_back({name, err, err <= 1e-4}); };
    Rng rng(99);

    {
        Tensor x = randn({2, 3, 5, 5}, rng);
        Tensor w = randn({4, 3, 3, 3}, rng, 0.5);
        Tensor b = randn({4}, rng, 0.2);
        push("conv2d", gradcheck_max_rel_err([&] { return conv(x, w, b, {1, 1}, {1, 1}); }, {x, w, b}));
        push("conv2d_strided", gradcheck_max_rel_err([&] { return conv(x, w, b, {2, 2}, {1, 1}); }, {x, w, b}));
    }
    {
        Tensor x = randn({1, 2, 3, 4, 4}, rng);
        Tensor w = randn({3, 2, 3, 3, 3}, rng, 0.4);
        Tensor b = randn({3}, rng, 0.2);
        push("conv3d", gradcheck_max_rel_err([&] { return conv(x, w, b, {1, 2, 2}, {1, 1, 1}); }, {x, w, b}));
    }
    {
        Tensor x = randn({1, 3, 4, 4}, rng);
        Tensor w = randn({3, 2, 2, 2}, rng, 0.5);
        Tensor b = randn({2}, rng, 0.2);
        push("conv_transpose2d", gradcheck_max_rel_err([&] { return conv_transpose(x, w, b, {2, 2}); }, {x, w, b}));
    }
    {
        Tensor x = randn({2, 6, 3}, rng);
        Tensor w = randn({3, 4}, rng, 0.5);
        Tensor b = randn({3}, rng, 0.2);
        push("causal_conv1d", gradcheck_max_rel_err([&] { return causal_conv1d(x, w, b); }, {x, w, b}));
    }
    {
        Tensor x = randn({2, 5, 6}, rng);
        Tensor w = randn({4, 6}, rng, 0.5);
        Tensor b = randn({4}, rng, 0.2);
        push("linear", gradcheck_max_rel_err([&] { return linear(x, w, b); }, {x, w, b}));
    }
    {
        Tensor a = randn({3, 4}, rng);
        Tensor b = randn({4, 5}, rng);
        push("matmul", gradcheck_max_rel_err([&] { return matmul(a, b); }, {a, b}));
        Tensor c = randn({3, 4}, rng);
        push("hadamard", gradcheck_max_rel_err([&] { return hadamard(a, c); }, {a, c}));
        push("add", gradcheck_max_rel_err([&] { return add(a, c); }, {a, c}));
    }
    {
        Tensor x = randn({2, 3, 4, 4}, rng);
        Tensor g = Tensor::full({3}, DType::F64, 1.0);
        g.set_requires_grad(true);
        Tensor s = randn({3}, rng, 0.1);
        push("instance_norm", gradcheck_max_rel_err([&] { return instance_norm(x, g, s, 1e-5); }, {x, g, s}));
    }
    {
        Tensor x = randn({2, 4, 6}, rng);
        Tensor g = Tensor::full({6}, DType::F64, 1.0);
        g.set_requires_grad(true);
        Tensor s = randn({6}, rng, 0.1);
        push("layer_norm", gradcheck_max_rel_err([&] { return layer_norm(x, g, s, 1e-5); }, {x, g, s}));
    }
    {
        Tensor x = Tensor::zeros({3, 7}, DType::F64);
        fill_uniform(x, rng, 0.5, 2.0);  // away from the leaky_relu kink
        x.set_requires_grad(true);
        push("silu", gradcheck_max_rel_err([&] { return silu(x); }, {x}));
        push("softplus", gradcheck_max_rel_err([&] { return softplus(x); }, {x}));
        push("leaky_relu", gradcheck_max_rel_err([&] { return leaky_relu(x, 0.01); }, {x}));
        push("softmax", gradcheck_max_rel_err([&] { return hadamard(softmax(x, 1), x); }, {x}));
        push("reshape_permute", gradcheck_max_rel_err(
                                    [&] { return permute(reshape(hadamard(x, x), {7, 3}), {1, 0}); }, {x}));
    }
    {
        Tensor a = randn({2, 3, 4}, rng);
        Tensor b = randn({2, 2, 4}, rng);
        push("concat", gradcheck_max_rel_err([&] { return hadamard(concat(a, b, 1), concat(a, b, 1)); }, {a, b}));
    }
    {
        Rng prng(7);
        int64_t B = 1, L = 8, C = 3, N = 4;
        Tensor u = randn({B, L, C}, prng);
        Tensor delta = Tensor::zeros({B, L, C}, DType::F64);
        fill_uniform(delta, prng, 0.01, 0.2);
        delta.set_requires_grad(true);
        Tensor A = s4d_real_init(C, N, DType::F64);
        A.set_requires_grad(true);
        Tensor Bt = randn({B, L, N}, prng);
        Tensor Ct = randn({B, L, N}, prng);
        Tensor D = Tensor::full({C}, DType::F64, 1.0);
        D.set_requires_grad(true);
        push("selective_scan", gradcheck_max_rel_err(
                                   [&] { return selective_scan(u, delta, A, Bt, Ct, D, 4); },
                                   {u, delta, A, Bt, Ct, D}));
    }
    {
        Rng brng(21);
        MambaBlockCfg mc;
        mc.model_channels = 3;
        mc.state_size = 4;
        mc.conv_width = 3;
        mc.chunk_size = 4;
        MambaBlock block(mc, DType::F64, brng);
        Tensor x = randn({1, 6, 3}, brng);
        ParamList params;
        block.collect_parameters("m", params);
        std::vector<Tensor> wrt{x};
        for (auto& [n, t] : params.items) wrt.push_back(t);
        push("mamba_block", gradcheck_max_rel_err([&] { return block.forward(x); }, wrt));
    }
    {
        Rng brng(22);
        UMambaBlockCfg uc;
        uc.res.spatial_rank = 2;
        uc.res.channels_in = 2;
        uc.res.channels_out = 3;
        uc.mamba.state_size = 4;
        uc.mamba.conv_width = 3;
        UMambaBlock block(uc, DType::F64, brng);
        Tensor x = randn({1, 2, 4, 4}, brng);
        ParamList params;
        block.collect_parameters("u", params);
        std::vector<Tensor> wrt{x};
        for (auto& [n, t] : params.items) wrt.push_back(t);
        push("umamba_block", gradcheck_max_rel_err([&] { return block.forward(x); }, wrt));
    }
    {
        Rng lrng(5);
        Tensor probs = Tensor::zeros({1, 2, 3, 3}, DType::F64);
        fill_uniform(probs, lrng, 0.1, 0.9);
        probs.set_requires_grad(true);
        Tensor target = Tensor::zeros({1, 3, 3}, DType::U8);
        for (int64_t i = 0; i < 9; ++i) target.set_flat(i, static_cast<double>(lrng.randint(0, 2)));
        push("dice_ce_loss",
             gradcheck_max_rel_err([&] { return dice_ce_loss(probs, target).total; }, {probs}));
    }
    return out;
}

}  // namespace umamba
