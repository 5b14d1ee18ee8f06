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
#include "op_kernels.hpp"

namespace umamba {

using detail::dispatch_float;
using detail::require_float;
using detail::require_same_dtype;

namespace {

// Core of linear/linear_nobias: x is (rows, in) after flattening the leading
// axes, w is (out, in), optional bias (out).
Tensor linear_impl(const Tensor& x, const Tensor& w, const Tensor* bias) {
    require_float(x, "linear");
    require_same_dtype(x, w, "linear");
    if (w.rank() != 2) throw DimensionError(cat("linear: weight must be 2-d, got ", shape_str(w.shape())));
    if (x.rank() < 1) throw DimensionError("linear: input rank 0");
    int64_t in = x.shape().back();
    int64_t out = w.shape()[0];
    if (w.shape()[1] != in)
        throw DimensionError(cat("linear: trailing axis ", x.rank() - 1, " has ", in, " features, weight expects ",
                                 w.shape()[1]));
    if (bias && (bias->rank() != 1 || bias->shape()[0] != out))
        throw DimensionError(cat("linear: bias shape ", shape_str(bias->shape()), " vs out ", out));
    int64_t rows = x.numel() / in;
    std::vector<int64_t> yshape = x.shape();
    yshape.back() = out;
    Tensor y = Tensor::zeros(yshape, x.dtype());
    dispatch_float(x.dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* xp = x.data<T>().data();
        const T* wp = w.data<T>().data();
        const T* bp = bias ? bias->data<T>().data() : nullptr;
        T* yp = y.data<T>().data();
#pragma omp parallel for schedule(static)
        for (int64_t r = 0; r < rows; ++r) {
            const T* xr = xp + r * in;
            T* yr = yp + r * out;
            for (int64_t o = 0; o < out; ++o) {
                const T* wr = wp + o * in;
                T acc = bp ? bp[o] : T(0);
                for (int64_t i = 0; i < in; ++i) acc += xr[i] * wr[i];
                yr[o] = acc;
            }
        }
    });
    std::vector<Tensor> inputs{x, w};
    if (bias) inputs.push_back(*bias);
    if (autograd::should_record(inputs)) {
        Tensor xin = x, win = w, yout = y;
        Tensor bin;
        bool has_bias = bias != nullptr;
        if (has_bias) bin = *bias;
        autograd::record(inputs, y, [xin, win, bin, yout, has_bias, rows, in, out]() mutable {
            dispatch_float(xin.dtype(), [&](auto tag) {
                using T = decltype(tag);
                const T* xp = xin.data<T>().data();
                const T* wp = win.data<T>().data();
                const T* gy = yout.grad<T>().data();
                if (xin.requires_grad()) {
                    xin.ensure_grad();
                    T* gx = xin.grad<T>().data();
#pragma omp parallel for schedule(static)
                    for (int64_t r = 0; r < rows; ++r) {
                        const T* gyr = gy + r * out;
                        T* gxr = gx + r * in;
                        for (int64_t o = 0; o < out; ++o) {
                            T g = gyr[o];
                            const T* wr = wp + o * in;
                            for (int64_t i = 0; i < in; ++i) gxr[i] += g * wr[i];
                        }
                    }
                }
                if (win.requires_grad()) {
                    win.ensure_grad();
                    T* gw = win.grad<T>().data();
#pragma omp parallel for schedule(static)
                    for (int64_t o = 0; o < out; ++o) {
                        T* gwr = gw + o * in;
                        for (int64_t r = 0; r < rows; ++r) {
                            T g = gy[r * out + o];
                            const T* xr = xp + r * in;
                            for (int64_t i = 0; i < in; ++i) gwr[i] += g * xr[i];
                        }
                    }
                }
                if (has_bias && bin.requires_grad()) {
                    bin.ensure_grad();
                    T* gb = bin.grad<T>().data();
                    for (int64_t r = 0; r < rows; ++r)
                        for (int64_t o = 0; o < out; ++o) gb[o] += gy[r * out + o];
                }
            });
        });
    }
    return y;
}

}  // namespace

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) { return linear_impl(x, w, &b); }

Tensor linear_nobias(const Tensor& x, const Tensor& w) { return linear_impl(x, w, nullptr); }

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_float(a, "matmul");
    require_same_dtype(a, b, "matmul");
    if (a.rank() != 2 || b.rank() != 2)
        throw DimensionError(cat("matmul: 2-d tensors required, got ", shape_str(a.shape()), " and ",
                                 shape_str(b.shape())));
    int64_t m = a.shape()[0], k = a.shape()[1], k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2) throw DimensionError(cat("matmul: inner axis mismatch ", k, " vs ", k2));
    Tensor y = Tensor::zeros({m, n}, a.dtype());
    dispatch_float(a.dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* ap = a.data<T>().data();
        const T* bp = b.data<T>().data();
        T* yp = y.data<T>().data();
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < m; ++i) {
            for (int64_t kk = 0; kk < k; ++kk) {
                T av = ap[i * k + kk];
                const T* br = bp + kk * n;
                T* yr = yp + i * n;
                for (int64_t j = 0; j < n; ++j) yr[j] += av * br[j];
            }
        }
    });
    if (autograd::should_record({a, b})) {
        Tensor ain = a, bin = b, yout = y;
        autograd::record({a, b}, y, [ain, bin, yout, m, k, n]() mutable {
            dispatch_float(ain.dtype(), [&](auto tag) {
                using T = decltype(tag);
                const T* gy = yout.grad<T>().data();
                if (ain.requires_grad()) {
                    ain.ensure_grad();
                    T* ga = ain.grad<T>().data();
                    const T* bp = bin.data<T>().data();
                    for (int64_t i = 0; i < m; ++i)
                        for (int64_t j = 0; j < n; ++j) {
                            T g = gy[i * n + j];
                            for (int64_t kk = 0; kk < k; ++kk) ga[i * k + kk] += g * bp[kk * n + j];
                        }
                }
                if (bin.requires_grad()) {
                    bin.ensure_grad();
                    T* gb = bin.grad<T>().data();
                    const T* ap = ain.data<T>().data();
                    for (int64_t i = 0; i < m; ++i)
                        for (int64_t kk = 0; kk < k; ++kk) {
                            T av = ap[i * k + kk];
                            for (int64_t j = 0; j < n; ++j) gb[kk * n + j] += av * gy[i * n + j];
                        }
                }
            });
        });
    }
    return y;
}

}  // namespace umamba
