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
#ifndef UMAMBA_SRC_OP_KERNELS_HPP
#define UMAMBA_SRC_OP_KERNELS_HPP

#include "umamba/ops.hpp"

namespace umamba::detail {

// Runs f with a value of the matching scalar type. Float dtypes only.
template <class F>
decltype(auto) dispatch_float(DType dt, F&& f) {
    switch (dt) {
        case DType::F32: return f(float{});
        case DType::F64: return f(double{});
        default: throw ContractError("op: float tensor required");
    }
}

inline void require_float(const Tensor& t, const char* op) {
    if (!is_float_dtype(t.dtype())) throw ContractError(cat(op, ": float tensor required"));
}

inline void require_same_dtype(const Tensor& a, const Tensor& b, const char* op) {
    if (a.dtype() != b.dtype())
        throw ContractError(cat(op, ": mixed dtypes ", dtype_name(a.dtype()), " vs ", dtype_name(b.dtype())));
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() == b.shape()) return;
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    size_t axis = 0;
    for (; axis < std::min(sa.size(), sb.size()); ++axis)
        if (sa[axis] != sb[axis]) break;
    throw DimensionError(cat(op, ": shape mismatch on axis ", axis, ": ", shape_str(sa), " vs ", shape_str(sb)));
}

}  // namespace umamba::detail

#endif
