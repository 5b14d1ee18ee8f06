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
#include "umamba/loss.hpp"

#include <cmath>

#include "op_kernels.hpp"

namespace umamba {

using detail::dispatch_float;
using detail::require_float;

LossValue dice_ce_loss(const Tensor& probs, const Tensor& target, const LossCfg& cfg) {
    require_float(probs, "dice_ce_loss");
    if (target.dtype() != DType::U8) throw ContractError("dice_ce_loss: target must be a u8 label map");
    if (probs.rank() < 3)
        throw DimensionError(cat("dice_ce_loss: probs must be (B,K,spatial...), got ", shape_str(probs.shape())));
    int64_t B = probs.shape()[0];
    int64_t K = probs.shape()[1];
    int64_t M = probs.numel() / (B * K);  // voxels per sample
    if (target.rank() != probs.rank() - 1 || target.shape()[0] != B || target.numel() != B * M)
        throw DimensionError(cat("dice_ce_loss: target shape ", shape_str(target.shape()), " vs probs ",
                                 shape_str(probs.shape())));
    auto tgt = target.data<uint8_t>();
    for (uint8_t v : tgt)
        if (v >= K) throw ContractError(cat("dice_ce_loss: target label ", int(v), " out of range [0,", K, ")"));

    const double s = cfg.dice_smooth;
    // Per-class batch-pooled sums for soft Dice, plus cross-entropy.
    std::vector<double> sum_pt(static_cast<size_t>(K), 0.0);
    std::vector<double> sum_p(static_cast<size_t>(K), 0.0);
    std::vector<double> sum_t(static_cast<size_t>(K), 0.0);
    double ce = 0.0;
    constexpr double kCeFloor = 1e-12;  // log argument floor
    dispatch_float(probs.dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* pp = probs.data<T>().data();
        const uint8_t* tp = tgt.data();
        for (int64_t b = 0; b < B; ++b) {
            const T* pb = pp + b * K * M;
            const uint8_t* tb = tp + b * M;
            for (int64_t k = 0; k < K; ++k) {
                const T* pk = pb + k * M;
                double sp = 0.0, spt = 0.0;
                int64_t st = 0;
                for (int64_t v = 0; v < M; ++v) {
                    double p = pk[v];
                    sp += p;
                    if (tb[v] == k) {
                        spt += p;
                        ++st;
                    }
                }
                sum_p[static_cast<size_t>(k)] += sp;
                sum_pt[static_cast<size_t>(k)] += spt;
                sum_t[static_cast<size_t>(k)] += static_cast<double>(st);
            }
            for (int64_t v = 0; v < M; ++v)
                ce -= std::log(std::max(static_cast<double>(pb[tb[v] * M + v]), kCeFloor));
        }
    });
    ce /= static_cast<double>(B * M);
    double dice_loss = 0.0;
    std::vector<double> num(static_cast<size_t>(K)), den(static_cast<size_t>(K));
    for (int64_t k = 0; k < K; ++k) {
        num[static_cast<size_t>(k)] = 2.0 * sum_pt[static_cast<size_t>(k)] + s;
        den[static_cast<size_t>(k)] = sum_p[static_cast<size_t>(k)] + sum_t[static_cast<size_t>(k)] + s;
        dice_loss += 1.0 - num[static_cast<size_t>(k)] / den[static_cast<size_t>(k)];
    }
    dice_loss /= static_cast<double>(K);
    double total = dice_loss + ce;

    Tensor out = Tensor::zeros({1}, probs.dtype());
    out.set_flat(0, total);
    if (autograd::should_record({probs})) {
        Tensor pin = probs, tin = target, lout = out;
        auto numv = std::make_shared<std::vector<double>>(std::move(num));
        auto denv = std::make_shared<std::vector<double>>(std::move(den));
        autograd::record({probs}, out, [pin, tin, lout, numv, denv, B, K, M]() mutable {
            pin.ensure_grad();
            dispatch_float(pin.dtype(), [&](auto tag) {
                using T = decltype(tag);
                const T* pp = pin.data<T>().data();
                const uint8_t* tp = tin.data<uint8_t>().data();
                T* gp = pin.grad<T>().data();
                double gl = lout.grad<T>()[0];
                double inv_bm = 1.0 / static_cast<double>(B * M);
                double inv_k = 1.0 / static_cast<double>(K);
                for (int64_t b = 0; b < B; ++b) {
                    const T* pb = pp + b * K * M;
                    T* gb = gp + b * K * M;
                    const uint8_t* tb = tp + b * M;
                    for (int64_t k = 0; k < K; ++k) {
                        double n = (*numv)[static_cast<size_t>(k)];
                        double d = (*denv)[static_cast<size_t>(k)];
                        const T* pk = pb + k * M;
                        T* gk = gb + k * M;
                        for (int64_t v = 0; v < M; ++v) {
                            bool is_t = tb[v] == k;
                            // d(dice_loss)/dp = -(1/K) * (2*t*den - num) / den^2
                            double g = -inv_k * ((is_t ? 2.0 * d : 0.0) - n) / (d * d);
                            if (is_t) {
                                double p = std::max(static_cast<double>(pk[v]), 1e-12);
                                g -= inv_bm / p;  // d(ce)/dp_target
                            }
                            gk[v] += static_cast<T>(gl * g);
                        }
                    }
                }
            });
        });
    }
    return LossValue{out, dice_loss, ce};
}

}  // namespace umamba
