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
#include <cmath>

#include "op_kernels.hpp"

namespace umamba {

using detail::dispatch_float;
using detail::require_float;
using detail::require_same_dtype;

// Both norms standardize rows of length m with biased variance, then apply a
// per-channel affine pair. An instance-norm row is one (sample, channel)
// spatial slice; a layer-norm row is the trailing channel axis of one (b, l)
// site, so its affine index runs within the row.

Tensor instance_norm(const Tensor& x, const Tensor& scale, const Tensor& shift, double eps) {
    require_float(x, "instance_norm");
    require_same_dtype(x, scale, "instance_norm");
    require_same_dtype(x, shift, "instance_norm");
    if (eps <= 0) throw ContractError("instance_norm: eps must be positive");
    if (x.rank() < 3)
        throw DimensionError(cat("instance_norm: input must be (B,C,spatial...), got ", shape_str(x.shape())));
    int64_t B = x.shape()[0], C = x.shape()[1];
    int64_t m = x.numel() / (B * C);
    if (scale.numel() != C || shift.numel() != C)
        throw DimensionError(cat("instance_norm: affine params must have ", C, " channels, got ",
                                 shape_str(scale.shape()), " / ", shape_str(shift.shape())));
    int64_t rows = B * C;
    Tensor y = Tensor::zeros(x.shape(), x.dtype());
    Tensor xhat = Tensor::zeros(x.shape(), x.dtype());  // saved for backward
    std::vector<double> mu(rows), inv_sd(rows);
    dispatch_float(x.dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* xp = x.data<T>().data();
        const T* gp = scale.data<T>().data();
        const T* bp = shift.data<T>().data();
        T* yp = y.data<T>().data();
        T* hp = xhat.data<T>().data();
#pragma omp parallel for schedule(static)
        for (int64_t r = 0; r < rows; ++r) {
            const T* xr = xp + r * m;
            double s = 0.0, s2 = 0.0;
            for (int64_t i = 0; i < m; ++i) {
                double v = xr[i];
                s += v;
                s2 += v * v;
            }
            double mean = s / m;
            double var = s2 / m - mean * mean;
            if (var < 0) var = 0;
            double isd = 1.0 / std::sqrt(var + eps);
            mu[r] = mean;
            inv_sd[r] = isd;
            int64_t c = r % C;
            double gamma = gp[c], beta = bp[c];
            T* yr = yp + r * m;
            T* hr = hp + r * m;
            for (int64_t i = 0; i < m; ++i) {
                double h = (static_cast<double>(xr[i]) - mean) * isd;
                hr[i] = static_cast<T>(h);
                yr[i] = static_cast<T>(gamma * h + beta);
            }
        }
    });
    if (autograd::should_record({x, scale, shift})) {
        Tensor xin = x, gin = scale, bin = shift, yout = y, hsave = xhat;
        auto mus = std::make_shared<std::vector<double>>(std::move(mu));
        auto isds = std::make_shared<std::vector<double>>(std::move(inv_sd));
        autograd::record({x, scale, shift}, y, [xin, gin, bin, yout, hsave, mus, isds, rows, m, C]() mutable {
            dispatch_float(xin.dtype(), [&](auto tag) {
                using T = decltype(tag);
                const T* gy = yout.grad<T>().data();
                const T* hp = hsave.data<T>().data();
                const T* gp = gin.data<T>().data();
                if (xin.requires_grad()) {
                    xin.ensure_grad();
                    T* gx = xin.grad<T>().data();
#pragma omp parallel for schedule(static)
                    for (int64_t r = 0; r < rows; ++r) {
                        int64_t c = r % C;
                        double gamma = gp[c];
                        double isd = (*isds)[r];
                        const T* gyr = gy + r * m;
                        const T* hr = hp + r * m;
                        T* gxr = gx + r * m;
                        double sum_dh = 0.0, sum_dh_h = 0.0;
                        for (int64_t i = 0; i < m; ++i) {
                            double dh = static_cast<double>(gyr[i]) * gamma;
                            sum_dh += dh;
                            sum_dh_h += dh * static_cast<double>(hr[i]);
                        }
                        for (int64_t i = 0; i < m; ++i) {
                            double dh = static_cast<double>(gyr[i]) * gamma;
                            double h = hr[i];
                            double dx = isd * (dh - sum_dh / m - h * sum_dh_h / m);
                            gxr[i] += static_cast<T>(dx);
                        }
                    }
                }
                if (gin.requires_grad()) {
                    gin.ensure_grad();
                    T* gg = gin.grad<T>().data();
                    for (int64_t r = 0; r < rows; ++r) {
                        int64_t c = r % C;
                        const T* gyr = gy + r * m;
                        const T* hr = hp + r * m;
                        double acc = 0.0;
                        for (int64_t i = 0; i < m; ++i) acc += static_cast<double>(gyr[i]) * static_cast<double>(hr[i]);
                        gg[c] += static_cast<T>(acc);
                    }
                }
                if (bin.requires_grad()) {
                    bin.ensure_grad();
                    T* gb = bin.grad<T>().data();
                    for (int64_t r = 0; r < rows; ++r) {
                        int64_t c = r % C;
                        const T* gyr = gy + r * m;
                        double acc = 0.0;
                        for (int64_t i = 0; i < m; ++i) acc += gyr[i];
                        gb[c] += static_cast<T>(acc);
                    }
                }
            });
        });
    }
    return y;
}

Tensor layer_norm(const Tensor& x, const Tensor& scale, const Tensor& shift, double eps) {
    require_float(x, "layer_norm");
    require_same_dtype(x, scale, "layer_norm");
    require_same_dtype(x, shift, "layer_norm");
    if (eps <= 0) throw ContractError("layer_norm: eps must be positive");
    if (x.rank() < 2)
        throw DimensionError(cat("layer_norm: input rank must be >= 2, got ", shape_str(x.shape())));
    int64_t C = x.shape().back();
    int64_t rows = x.numel() / C;
    if (scale.numel() != C || shift.numel() != C)
        throw DimensionError(cat("layer_norm: affine params must have ", C, " channels, got ",
                                 shape_str(scale.shape()), " / ", shape_str(shift.shape())));
    Tensor y = Tensor::zeros(x.shape(), x.dtype());
    Tensor xhat = Tensor::zeros(x.shape(), x.dtype());
    std::vector<double> inv_sd(rows);
    dispatch_float(x.dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* xp = x.data<T>().data();
        const T* gp = scale.data<T>().data();
        const T* bp = shift.data<T>().data();
        T* yp = y.data<T>().data();
        T* hp = xhat.data<T>().data();
#pragma omp parallel for schedule(static)
        for (int64_t r = 0; r < rows; ++r) {
            const T* xr = xp + r * C;
            double s = 0.0, s2 = 0.0;
            for (int64_t i = 0; i < C; ++i) {
                double v = xr[i];
                s += v;
                s2 += v * v;
            }
            double mean = s / C;
            double var = s2 / C - mean * mean;
            if (var < 0) var = 0;
            double isd = 1.0 / std::sqrt(var + eps);
            inv_sd[r] = isd;
            T* yr = yp + r * C;
            T* hr = hp + r * C;
            for (int64_t i = 0; i < C; ++i) {
                double h = (static_cast<double>(xr[i]) - mean) * isd;
                hr[i] = static_cast<T>(h);
                yr[i] = static_cast<T>(static_cast<double>(gp[i]) * h + static_cast<double>(bp[i]));
            }
        }
    });
    if (autograd::should_record({x, scale, shift})) {
        Tensor xin = x, gin = scale, bin = shift, yout = y, hsave = xhat;
        auto isds = std::make_shared<std::vector<double>>(std::move(inv_sd));
        autograd::record({x, scale, shift}, y, [xin, gin, bin, yout, hsave, isds, rows, C]() mutable {
            dispatch_float(xin.dtype(), [&](auto tag) {
                using T = decltype(tag);
                const T* gy = yout.grad<T>().data();
                const T* hp = hsave.data<T>().data();
                const T* gp = gin.data<T>().data();
                if (xin.requires_grad()) {
                    xin.ensure_grad();
                    T* gx = xin.grad<T>().data();
#pragma omp parallel for schedule(static)
                    for (int64_t r = 0; r < rows; ++r) {
                        double isd = (*isds)[r];
                        const T* gyr = gy + r * C;
                        const T* hr = hp + r * C;
                        T* gxr = gx + r * C;
                        double sum_dh = 0.0, sum_dh_h = 0.0;
                        for (int64_t i = 0; i < C; ++i) {
                            double dh = static_cast<double>(gyr[i]) * static_cast<double>(gp[i]);
                            sum_dh += dh;
                            sum_dh_h += dh * static_cast<double>(hr[i]);
                        }
                        for (int64_t i = 0; i < C; ++i) {
                            double dh = static_cast<double>(gyr[i]) * static_cast<double>(gp[i]);
                            double h = hr[i];
                            gxr[i] += static_cast<T>(isd * (dh - sum_dh / C - h * sum_dh_h / C));
                        }
                    }
                }
                if (gin.requires_grad()) {
                    gin.ensure_grad();
                    T* gg = gin.grad<T>().data();
                    for (int64_t r = 0; r < rows; ++r) {
                        const T* gyr = gy + r * C;
                        const T* hr = hp + r * C;
                        for (int64_t i = 0; i < C; ++i)
                            gg[i] += static_cast<T>(static_cast<double>(gyr[i]) * static_cast<double>(hr[i]));
                    }
                }
                if (bin.requires_grad()) {
                    bin.ensure_grad();
                    T* gb = bin.grad<T>().data();
                    for (int64_t r = 0; r < rows; ++r) {
                        const T* gyr = gy + r * C;
                        for (int64_t i = 0; i < C; ++i) gb[i] += gyr[i];
                    }
                }
            });
        });
    }
    return y;
}

}  // namespace umamba
