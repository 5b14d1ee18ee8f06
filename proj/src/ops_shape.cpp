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
#include <numeric>

#include "op_kernels.hpp"

namespace umamba {

using detail::dispatch_float;
using detail::require_float;
using detail::require_same_dtype;

Tensor reshape(const Tensor& x, std::vector<int64_t> new_shape) {
    require_float(x, "reshape");
    if (shape_numel(new_shape) != x.numel())
        throw DimensionError(cat("reshape: ", shape_str(x.shape()), " to ", shape_str(new_shape),
                                 " changes element count"));
    Tensor y = Tensor::zeros(new_shape, x.dtype());
    dispatch_float(x.dtype(), [&](auto tag) {
        using T = decltype(tag);
        auto src = x.data<T>();
        auto dst = y.data<T>();
        std::copy(src.begin(), src.end(), dst.begin());
    });
    if (autograd::should_record({x})) {
        Tensor xin = x, yout = y;
        autograd::record({x}, y, [xin, yout]() mutable {
            xin.ensure_grad();
            dispatch_float(xin.dtype(), [&](auto tag) {
                using T = decltype(tag);
                auto gy = yout.grad<T>();
                auto gx = xin.grad<T>();
                for (size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
            });
        });
    }
    return y;
}

Tensor permute(const Tensor& x, std::vector<int> perm) {
    require_float(x, "permute");
    int r = x.rank();
    if (static_cast<int>(perm.size()) != r)
        throw DimensionError(cat("permute: perm rank ", perm.size(), " vs tensor rank ", r));
    std::vector<bool> seen(r, false);
    for (int p : perm) {
        if (p < 0 || p >= r || seen[p]) throw DimensionError("permute: not a permutation");
        seen[p] = true;
    }
    std::vector<int64_t> out_shape(r);
    for (int a = 0; a < r; ++a) out_shape[a] = x.shape()[perm[a]];
    Tensor y = Tensor::zeros(out_shape, x.dtype());
    auto in_strides = row_major_strides(x.shape());
    // stride in the input for each output axis
    std::vector<int64_t> gather(r);
    for (int a = 0; a < r; ++a) gather[a] = in_strides[perm[a]];
    int64_t n = x.numel();
    dispatch_float(x.dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* xp = x.data<T>().data();
        T* yp = y.data<T>().data();
        std::vector<int64_t> idx(r, 0);
        int64_t src = 0;
        for (int64_t flat = 0; flat < n; ++flat) {
            yp[flat] = xp[src];
            for (int a = r - 1; a >= 0; --a) {
                idx[a]++;
                src += gather[a];
                if (idx[a] < out_shape[a]) break;
                src -= idx[a] * gather[a];
                idx[a] = 0;
            }
        }
    });
    if (autograd::should_record({x})) {
        Tensor xin = x, yout = y;
        autograd::record({x}, y, [xin, yout, gather, out_shape, r, n]() mutable {
            xin.ensure_grad();
            dispatch_float(xin.dtype(), [&](auto tag) {
                using T = decltype(tag);
                const T* gy = yout.grad<T>().data();
                T* gx = xin.grad<T>().data();
                std::vector<int64_t> idx(r, 0);
                int64_t src = 0;
                for (int64_t flat = 0; flat < n; ++flat) {
                    gx[src] += gy[flat];
                    for (int a = r - 1; a >= 0; --a) {
                        idx[a]++;
                        src += gather[a];
                        if (idx[a] < out_shape[a]) break;
                        src -= idx[a] * gather[a];
                        idx[a] = 0;
                    }
                }
            });
        });
    }
    return y;
}

Tensor concat(const Tensor& a, const Tensor& b, int axis) {
    require_float(a, "concat");
    require_same_dtype(a, b, "concat");
    int r = a.rank();
    if (b.rank() != r) throw DimensionError(cat("concat: rank ", r, " vs ", b.rank()));
    if (axis < 0 || axis >= r) throw DimensionError(cat("concat: axis ", axis, " invalid for rank ", r));
    for (int ax = 0; ax < r; ++ax)
        if (ax != axis && a.shape()[ax] != b.shape()[ax])
            throw DimensionError(cat("concat: shape mismatch on axis ", ax, ": ", shape_str(a.shape()), " vs ",
                                     shape_str(b.shape())));
    std::vector<int64_t> out_shape = a.shape();
    out_shape[axis] += b.shape()[axis];
    Tensor y = Tensor::zeros(out_shape, a.dtype());
    int64_t outer = 1;
    for (int ax = 0; ax < axis; ++ax) outer *= a.shape()[ax];
    int64_t inner = 1;
    for (int ax = axis + 1; ax < r; ++ax) inner *= a.shape()[ax];
    int64_t ka = a.shape()[axis], kb = b.shape()[axis];
    dispatch_float(a.dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* ap = a.data<T>().data();
        const T* bp = b.data<T>().data();
        T* yp = y.data<T>().data();
        for (int64_t o = 0; o < outer; ++o) {
            std::copy(ap + o * ka * inner, ap + (o + 1) * ka * inner, yp + o * (ka + kb) * inner);
            std::copy(bp + o * kb * inner, bp + (o + 1) * kb * inner, yp + o * (ka + kb) * inner + ka * inner);
        }
    });
    if (autograd::should_record({a, b})) {
        Tensor ain = a, bin = b, yout = y;
        autograd::record({a, b}, y, [ain, bin, yout, outer, inner, ka, kb]() mutable {
            dispatch_float(ain.dtype(), [&](auto tag) {
                using T = decltype(tag);
                const T* gy = yout.grad<T>().data();
                if (ain.requires_grad()) {
                    ain.ensure_grad();
                    T* ga = ain.grad<T>().data();
                    for (int64_t o = 0; o < outer; ++o)
                        for (int64_t i = 0; i < ka * inner; ++i) ga[o * ka * inner + i] += gy[o * (ka + kb) * inner + i];
                }
                if (bin.requires_grad()) {
                    bin.ensure_grad();
                    T* gb = bin.grad<T>().data();
                    for (int64_t o = 0; o < outer; ++o)
                        for (int64_t i = 0; i < kb * inner; ++i)
                            gb[o * kb * inner + i] += gy[o * (ka + kb) * inner + ka * inner + i];
                }
            });
        });
    }
    return y;
}

}  // namespace umamba
