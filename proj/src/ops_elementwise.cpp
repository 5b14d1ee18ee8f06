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
using detail::require_same_shape;

namespace {

// Shared skeleton for unary maps: y = f(x), dx += df(x, y, dy).
template <class Fwd, class Bwd>
Tensor unary_op(const char* name, const Tensor& x, Fwd fwd, Bwd bwd) {
    require_float(x, name);
    Tensor y = Tensor::zeros(x.shape(), x.dtype());
    int64_t n = x.numel();
    dispatch_float(x.dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* xp = x.data<T>().data();
        T* yp = y.data<T>().data();
        for (int64_t i = 0; i < n; ++i) yp[i] = static_cast<T>(fwd(static_cast<double>(xp[i])));
    });
    if (autograd::should_record({x})) {
        Tensor xin = x, yout = y;
        autograd::record({x}, y, [xin, yout, bwd, n]() mutable {
            xin.ensure_grad();
            dispatch_float(xin.dtype(), [&](auto tag) {
                using T = decltype(tag);
                const T* xp = xin.data<T>().data();
                const T* yp = yout.data<T>().data();
                const T* gy = yout.grad<T>().data();
                T* gx = xin.grad<T>().data();
                for (int64_t i = 0; i < n; ++i)
                    gx[i] += static_cast<T>(bwd(static_cast<double>(xp[i]), static_cast<double>(yp[i])) *
                                            static_cast<double>(gy[i]));
            });
        });
    }
    return y;
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

Tensor leaky_relu(const Tensor& x, double slope) {
    return unary_op(
        "leaky_relu", x, [slope](double v) { return v >= 0.0 ? v : slope * v; },
        [slope](double v, double) { return v >= 0.0 ? 1.0 : slope; });
}

Tensor silu(const Tensor& x) {
    return unary_op(
        "silu", x, [](double v) { return v * sigmoid(v); },
        [](double v, double) {
            double s = sigmoid(v);
            return s * (1.0 + v * (1.0 - s));
        });
}

Tensor softplus(const Tensor& x) {
    return unary_op(
        "softplus", x,
        [](double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); },
        [](double v, double) { return sigmoid(v); });
}

Tensor scale(const Tensor& x, double s) {
    return unary_op(
        "scale", x, [s](double v) { return s * v; }, [s](double, double) { return s; });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    require_float(a, "hadamard");
    require_same_dtype(a, b, "hadamard");
    require_same_shape(a, b, "hadamard");
    Tensor y = Tensor::zeros(a.shape(), a.dtype());
    int64_t n = a.numel();
    dispatch_float(a.dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* ap = a.data<T>().data();
        const T* bp = b.data<T>().data();
        T* yp = y.data<T>().data();
        for (int64_t i = 0; i < n; ++i) yp[i] = ap[i] * bp[i];
    });
    if (autograd::should_record({a, b})) {
        Tensor ain = a, bin = b, yout = y;
        autograd::record({a, b}, y, [ain, bin, yout, n]() mutable {
            dispatch_float(ain.dtype(), [&](auto tag) {
                using T = decltype(tag);
                const T* gy = yout.grad<T>().data();
                if (ain.requires_grad()) {
                    ain.ensure_grad();
                    T* ga = ain.grad<T>().data();
                    const T* bp = bin.data<T>().data();
                    for (int64_t i = 0; i < n; ++i) ga[i] += gy[i] * bp[i];
                }
                if (bin.requires_grad()) {
                    bin.ensure_grad();
                    T* gb = bin.grad<T>().data();
                    const T* ap = ain.data<T>().data();
                    for (int64_t i = 0; i < n; ++i) gb[i] += gy[i] * ap[i];
                }
            });
        });
    }
    return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_float(a, "add");
    require_same_dtype(a, b, "add");
    require_same_shape(a, b, "add");
    Tensor y = Tensor::zeros(a.shape(), a.dtype());
    int64_t n = a.numel();
    dispatch_float(a.dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* ap = a.data<T>().data();
        const T* bp = b.data<T>().data();
        T* yp = y.data<T>().data();
        for (int64_t i = 0; i < n; ++i) yp[i] = ap[i] + bp[i];
    });
    if (autograd::should_record({a, b})) {
        Tensor ain = a, bin = b, yout = y;
        autograd::record({a, b}, y, [ain, bin, yout, n]() mutable {
            dispatch_float(ain.dtype(), [&](auto tag) {
                using T = decltype(tag);
                const T* gy = yout.grad<T>().data();
                if (ain.requires_grad()) {
                    ain.ensure_grad();
                    T* ga = ain.grad<T>().data();
                    for (int64_t i = 0; i < n; ++i) ga[i] += gy[i];
                }
                if (bin.requires_grad()) {
                    bin.ensure_grad();
                    T* gb = bin.grad<T>().data();
                    for (int64_t i = 0; i < n; ++i) gb[i] += gy[i];
                }
            });
        });
    }
    return y;
}

Tensor softmax(const Tensor& x, int axis) {
    require_float(x, "softmax");
    if (axis < 0 || axis >= x.rank())
        throw DimensionError(cat("softmax: axis ", axis, " invalid for shape ", shape_str(x.shape())));
    Tensor y = Tensor::zeros(x.shape(), x.dtype());
    const auto& shape = x.shape();
    int64_t k = shape[axis];
    int64_t inner = 1;
    for (int a = axis + 1; a < x.rank(); ++a) inner *= shape[a];
    int64_t outer = x.numel() / (k * inner);
    dispatch_float(x.dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* xp = x.data<T>().data();
        T* yp = y.data<T>().data();
        for (int64_t o = 0; o < outer; ++o) {
            for (int64_t i = 0; i < inner; ++i) {
                const T* row = xp + o * k * inner + i;
                T* out = yp + o * k * inner + i;
                double mx = -1e300;
                for (int64_t c = 0; c < k; ++c) mx = std::max(mx, static_cast<double>(row[c * inner]));
                double z = 0.0;
                for (int64_t c = 0; c < k; ++c) z += std::exp(static_cast<double>(row[c * inner]) - mx);
                for (int64_t c = 0; c < k; ++c)
                    out[c * inner] = static_cast<T>(std::exp(static_cast<double>(row[c * inner]) - mx) / z);
            }
        }
    });
    if (autograd::should_record({x})) {
        Tensor xin = x, yout = y;
        autograd::record({x}, y, [xin, yout, k, inner, outer]() mutable {
            xin.ensure_grad();
            dispatch_float(xin.dtype(), [&](auto tag) {
                using T = decltype(tag);
                const T* yp = yout.data<T>().data();
                const T* gy = yout.grad<T>().data();
                T* gx = xin.grad<T>().data();
                for (int64_t o = 0; o < outer; ++o) {
                    for (int64_t i = 0; i < inner; ++i) {
                        int64_t base = o * k * inner + i;
                        double dot = 0.0;
                        for (int64_t c = 0; c < k; ++c)
                            dot += static_cast<double>(gy[base + c * inner]) * static_cast<double>(yp[base + c * inner]);
                        for (int64_t c = 0; c < k; ++c) {
                            double yv = yp[base + c * inner];
                            gx[base + c * inner] += static_cast<T>(yv * (static_cast<double>(gy[base + c * inner]) - dot));
                        }
                    }
                }
            });
        });
    }
    return y;
}

Tensor sum(const Tensor& x) {
    require_float(x, "sum");
    Tensor y = Tensor::zeros({1}, x.dtype());
    int64_t n = x.numel();
    dispatch_float(x.dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* xp = x.data<T>().data();
        T acc = 0;
        for (int64_t i = 0; i < n; ++i) acc += xp[i];
        y.data<T>()[0] = acc;
    });
    if (autograd::should_record({x})) {
        Tensor xin = x, yout = y;
        autograd::record({x}, y, [xin, yout, n]() mutable {
            xin.ensure_grad();
            dispatch_float(xin.dtype(), [&](auto tag) {
                using T = decltype(tag);
                T g = yout.grad<T>()[0];
                T* gx = xin.grad<T>().data();
                for (int64_t i = 0; i < n; ++i) gx[i] += g;
            });
        });
    }
    return y;
}

Tensor mean(const Tensor& x) {
    Tensor s = sum(x);
    return scale(s, 1.0 / static_cast<double>(x.numel()));
}

}  // namespace umamba
