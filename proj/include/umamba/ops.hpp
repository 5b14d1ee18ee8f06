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
#ifndef UMAMBA_OPS_HPP
#define UMAMBA_OPS_HPP

#include "umamba/graph.hpp"
#include "umamba/tensor.hpp"

namespace umamba {

// ---- elementwise -----------------------------------------------------------

Tensor leaky_relu(const Tensor& x, double slope);
Tensor silu(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double s);
Tensor softmax(const Tensor& x, int axis);

// ---- reductions ------------------------------------------------------------

Tensor sum(const Tensor& x);   // -> scalar
Tensor mean(const Tensor& x);  // -> scalar

// ---- linear algebra --------------------------------------------------------

/// y[..., o] = sum_i x[..., i] * w[o, i] + b[o]; w is (out, in), b is (out).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor linear_nobias(const Tensor& x, const Tensor& w);
/// Plain 2-D product: (M,K) x (K,N) -> (M,N).
Tensor matmul(const Tensor& a, const Tensor& b);

// ---- shape -----------------------------------------------------------------

Tensor reshape(const Tensor& x, std::vector<int64_t> new_shape);
Tensor permute(const Tensor& x, std::vector<int> perm);
Tensor concat(const Tensor& a, const Tensor& b, int axis);

// ---- convolution -----------------------------------------------------------

/// Cross-correlation over 1-3 spatial axes. x is (B, Cin, spatial...),
/// w is (Cout, Cin, k...), b is (Cout). Zero padding.
Tensor conv(const Tensor& x, const Tensor& w, const Tensor& b,
            std::vector<int64_t> stride, std::vector<int64_t> padding);

/// Adjoint of conv with the channel roles swapped: x is (B, Ca, spatial...),
/// w is (Ca, Cb, k...), output extent = (in-1)*stride + k per axis.
Tensor conv_transpose(const Tensor& x, const Tensor& w, const Tensor& b,
                      std::vector<int64_t> stride);

/// Depthwise causal 1-D convolution along the sequence axis of (B, L, C);
/// w is (C, K), left-padded so y_t depends on x_{t-K+1..t} only.
Tensor causal_conv1d(const Tensor& x, const Tensor& w, const Tensor& b);

// ---- normalization ---------------------------------------------------------

/// Normalizes each (sample, channel) slice of (B, C, spatial...) over its
/// spatial extent (biased variance), then applies per-channel scale/shift.
Tensor instance_norm(const Tensor& x, const Tensor& scale, const Tensor& shift, double eps);

/// Normalizes the trailing channel axis of (B, L, C).
Tensor layer_norm(const Tensor& x, const Tensor& scale, const Tensor& shift, double eps);

}  // namespace umamba

#endif
