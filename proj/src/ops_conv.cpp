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
#include <array>

#include "op_kernels.hpp"

namespace umamba {

using detail::dispatch_float;
using detail::require_float;
using detail::require_same_dtype;

namespace {

// All spatial ranks are normalized to 3 (leading dummy axes of extent 1) so a
// single loop nest serves 1-D, 2-D and 3-D.
struct ConvGeom {
    int spatial_rank;
    int64_t batch, cin, cout;
    std::array<int64_t, 3> in{1, 1, 1}, k{1, 1, 1}, s{1, 1, 1}, p{0, 0, 0}, out{1, 1, 1};
};

ConvGeom conv_geometry(const Tensor& x, const Tensor& w, const Tensor& b,
                       const std::vector<int64_t>& stride, const std::vector<int64_t>& padding,
                       bool transpose) {
    if (x.rank() < 3 || x.rank() > 5)
        throw DimensionError(cat("conv: input rank must be 3-5 (B, C, spatial...), got ", shape_str(x.shape())));
    ConvGeom g;
    g.spatial_rank = x.rank() - 2;
    if (w.rank() != x.rank())
        throw DimensionError(cat("conv: weight rank ", w.rank(), " vs input rank ", x.rank()));
    if (static_cast<int>(stride.size()) != g.spatial_rank)
        throw DimensionError(cat("conv: stride rank ", stride.size(), " vs spatial rank ", g.spatial_rank));
    if (!transpose && static_cast<int>(padding.size()) != g.spatial_rank)
        throw DimensionError(cat("conv: padding rank ", padding.size(), " vs spatial rank ", g.spatial_rank));
    g.batch = x.shape()[0];
    if (transpose) {
        // x: (B, Ca, ...), w: (Ca, Cb, ...)
        g.cin = x.shape()[1];
        g.cout = w.shape()[1];
        if (w.shape()[0] != g.cin)
            throw DimensionError(cat("conv_transpose: channel axis 1: input has ", g.cin, ", weight maps ",
                                     w.shape()[0]));
    } else {
        g.cin = x.shape()[1];
        g.cout = w.shape()[0];
        if (w.shape()[1] != g.cin)
            throw DimensionError(cat("conv: channel axis 1: input has ", g.cin, " channels, weight expects ",
                                     w.shape()[1]));
    }
    if (b.defined() && (b.rank() != 1 || b.shape()[0] != g.cout))
        throw DimensionError(cat("conv: bias shape ", shape_str(b.shape()), " vs out channels ", g.cout));
    int off = 3 - g.spatial_rank;
    for (int a = 0; a < g.spatial_rank; ++a) {
        g.in[off + a] = x.shape()[2 + a];
        g.k[off + a] = w.shape()[2 + a];
        g.s[off + a] = stride[a];
        g.p[off + a] = transpose ? 0 : padding[a];
        if (g.s[off + a] < 1) throw ContractError(cat("conv: stride must be >= 1 on axis ", 2 + a));
        if (g.p[off + a] < 0) throw ContractError(cat("conv: negative padding on axis ", 2 + a));
    }
    for (int a = 0; a < 3; ++a) {
        if (transpose) {
            g.out[a] = (g.in[a] - 1) * g.s[a] + g.k[a];
        } else {
            int64_t padded = g.in[a] + 2 * g.p[a];
            if (g.k[a] > padded)
                throw DimensionError(cat("conv: kernel extent ", g.k[a], " exceeds padded input ", padded,
                                         " on spatial axis ", a - (3 - g.spatial_rank) + 2));
            g.out[a] = (padded - g.k[a]) / g.s[a] + 1;
        }
    }
    return g;
}

std::vector<int64_t> output_shape(const ConvGeom& g) {
    std::vector<int64_t> s{g.batch, g.cout};
    int off = 3 - g.spatial_rank;
    for (int a = 0; a < g.spatial_rank; ++a) s.push_back(g.out[off + a]);
    return s;
}

}  // namespace

Tensor conv(const Tensor& x, const Tensor& w, const Tensor& b,
            std::vector<int64_t> stride, std::vector<int64_t> padding) {
    require_float(x, "conv");
    require_same_dtype(x, w, "conv");
    ConvGeom g = conv_geometry(x, w, b, stride, padding, false);
    Tensor y = Tensor::zeros(output_shape(g), x.dtype());
    const int64_t in_spatial = g.in[0] * g.in[1] * g.in[2];
    const int64_t out_spatial = g.out[0] * g.out[1] * g.out[2];
    const int64_t ksize = g.k[0] * g.k[1] * g.k[2];
    dispatch_float(x.dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* xp = x.data<T>().data();
        const T* wp = w.data<T>().data();
        const T* bp = b.defined() ? b.data<T>().data() : nullptr;
        T* yp = y.data<T>().data();
#pragma omp parallel for collapse(2) schedule(static)
        for (int64_t bi = 0; bi < g.batch; ++bi) {
            for (int64_t co = 0; co < g.cout; ++co) {
                const T* xb = xp + bi * g.cin * in_spatial;
                const T* wc = wp + co * g.cin * ksize;
                T* yb = yp + (bi * g.cout + co) * out_spatial;
                T bias = bp ? bp[co] : T(0);
                for (int64_t oz = 0; oz < g.out[0]; ++oz)
                    for (int64_t oy = 0; oy < g.out[1]; ++oy)
                        for (int64_t ox = 0; ox < g.out[2]; ++ox) {
                            T acc = bias;
                            int64_t z0 = oz * g.s[0] - g.p[0];
                            int64_t y0 = oy * g.s[1] - g.p[1];
                            int64_t x0 = ox * g.s[2] - g.p[2];
                            for (int64_t ci = 0; ci < g.cin; ++ci) {
                                const T* xc = xb + ci * in_spatial;
                                const T* wk = wc + ci * ksize;
                                for (int64_t kz = 0; kz < g.k[0]; ++kz) {
                                    int64_t iz = z0 + kz;
                                    if (iz < 0 || iz >= g.in[0]) continue;
                                    for (int64_t ky = 0; ky < g.k[1]; ++ky) {
                                        int64_t iy = y0 + ky;
                                        if (iy < 0 || iy >= g.in[1]) continue;
                                        const T* xrow = xc + (iz * g.in[1] + iy) * g.in[2];
                                        const T* wrow = wk + (kz * g.k[1] + ky) * g.k[2];
                                        for (int64_t kx = 0; kx < g.k[2]; ++kx) {
                                            int64_t ix = x0 + kx;
                                            if (ix < 0 || ix >= g.in[2]) continue;
                                            acc += xrow[ix] * wrow[kx];
                                        }
                                    }
                                }
                            }
                            yb[(oz * g.out[1] + oy) * g.out[2] + ox] = acc;
                        }
            }
        }
    });
    std::vector<Tensor> inputs{x, w};
    if (b.defined()) inputs.push_back(b);
    if (autograd::should_record(inputs)) {
        Tensor xin = x, win = w, bin = b, yout = y;
        autograd::record(inputs, y, [xin, win, bin, yout, g, in_spatial, out_spatial, ksize]() mutable {
            dispatch_float(xin.dtype(), [&](auto tag) {
                using T = decltype(tag);
                const T* xp = xin.data<T>().data();
                const T* wp = win.data<T>().data();
                const T* gy = yout.grad<T>().data();
                if (xin.requires_grad()) {
                    xin.ensure_grad();
                    T* gx = xin.grad<T>().data();
#pragma omp parallel for schedule(static)
                    for (int64_t bi = 0; bi < g.batch; ++bi) {
                        T* gxb = gx + bi * g.cin * in_spatial;
                        for (int64_t co = 0; co < g.cout; ++co) {
                            const T* gyb = gy + (bi * g.cout + co) * out_spatial;
                            const T* wc = wp + co * g.cin * ksize;
                            for (int64_t oz = 0; oz < g.out[0]; ++oz)
                                for (int64_t oy = 0; oy < g.out[1]; ++oy)
                                    for (int64_t ox = 0; ox < g.out[2]; ++ox) {
                                        T gval = gyb[(oz * g.out[1] + oy) * g.out[2] + ox];
                                        if (gval == T(0)) continue;
                                        int64_t z0 = oz * g.s[0] - g.p[0];
                                        int64_t y0 = oy * g.s[1] - g.p[1];
                                        int64_t x0 = ox * g.s[2] - g.p[2];
                                        for (int64_t ci = 0; ci < g.cin; ++ci) {
                                            T* gxc = gxb + ci * in_spatial;
                                            const T* wk = wc + ci * ksize;
                                            for (int64_t kz = 0; kz < g.k[0]; ++kz) {
                                                int64_t iz = z0 + kz;
                                                if (iz < 0 || iz >= g.in[0]) continue;
                                                for (int64_t ky = 0; ky < g.k[1]; ++ky) {
                                                    int64_t iy = y0 + ky;
                                                    if (iy < 0 || iy >= g.in[1]) continue;
                                                    T* gxrow = gxc + (iz * g.in[1] + iy) * g.in[2];
                                                    const T* wrow = wk + (kz * g.k[1] + ky) * g.k[2];
                                                    for (int64_t kx = 0; kx < g.k[2]; ++kx) {
                                                        int64_t ix = x0 + kx;
                                                        if (ix < 0 || ix >= g.in[2]) continue;
                                                        gxrow[ix] += gval * wrow[kx];
                                                    }
                                                }
                                            }
                                        }
                                    }
                        }
                    }
                }
                if (win.requires_grad()) {
                    win.ensure_grad();
                    T* gw = win.grad<T>().data();
#pragma omp parallel for collapse(2) schedule(static)
                    for (int64_t co = 0; co < g.cout; ++co) {
                        for (int64_t ci = 0; ci < g.cin; ++ci) {
                            T* gwk = gw + (co * g.cin + ci) * ksize;
                            for (int64_t bi = 0; bi < g.batch; ++bi) {
                                const T* xc = xp + (bi * g.cin + ci) * in_spatial;
                                const T* gyb = gy + (bi * g.cout + co) * out_spatial;
                                for (int64_t oz = 0; oz < g.out[0]; ++oz)
                                    for (int64_t oy = 0; oy < g.out[1]; ++oy)
                                        for (int64_t ox = 0; ox < g.out[2]; ++ox) {
                                            T gval = gyb[(oz * g.out[1] + oy) * g.out[2] + ox];
                                            if (gval == T(0)) continue;
                                            int64_t z0 = oz * g.s[0] - g.p[0];
                                            int64_t y0 = oy * g.s[1] - g.p[1];
                                            int64_t x0 = ox * g.s[2] - g.p[2];
                                            for (int64_t kz = 0; kz < g.k[0]; ++kz) {
                                                int64_t iz = z0 + kz;
                                                if (iz < 0 || iz >= g.in[0]) continue;
                                                for (int64_t ky = 0; ky < g.k[1]; ++ky) {
                                                    int64_t iy = y0 + ky;
                                                    if (iy < 0 || iy >= g.in[1]) continue;
                                                    const T* xrow = xc + (iz * g.in[1] + iy) * g.in[2];
                                                    T* gwrow = gwk + (kz * g.k[1] + ky) * g.k[2];
                                                    for (int64_t kx = 0; kx < g.k[2]; ++kx) {
                                                        int64_t ix = x0 + kx;
                                                        if (ix < 0 || ix >= g.in[2]) continue;
                                                        gwrow[kx] += gval * xrow[ix];
                                                    }
                                                }
                                            }
                                        }
                            }
                        }
                    }
                }
                if (bin.defined() && bin.requires_grad()) {
                    bin.ensure_grad();
                    T* gb = bin.grad<T>().data();
                    for (int64_t bi = 0; bi < g.batch; ++bi)
                        for (int64_t co = 0; co < g.cout; ++co) {
                            const T* gyb = gy + (bi * g.cout + co) * out_spatial;
                            T acc = 0;
                            for (int64_t i = 0; i < out_spatial; ++i) acc += gyb[i];
                            gb[co] += acc;
                        }
                }
            });
        });
    }
    return y;
}

Tensor conv_transpose(const Tensor& x, const Tensor& w, const Tensor& b, std::vector<int64_t> stride) {
    require_float(x, "conv_transpose");
    require_same_dtype(x, w, "conv_transpose");
    ConvGeom g = conv_geometry(x, w, b, stride, {}, true);
    Tensor y = Tensor::zeros(output_shape(g), x.dtype());
    const int64_t in_spatial = g.in[0] * g.in[1] * g.in[2];
    const int64_t out_spatial = g.out[0] * g.out[1] * g.out[2];
    const int64_t ksize = g.k[0] * g.k[1] * g.k[2];
    // Gather form: for each output site, sum over kernel offsets that land on
    // an input site. Writes are disjoint per (batch, out channel).
    dispatch_float(x.dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* xp = x.data<T>().data();
        const T* wp = w.data<T>().data();
        const T* bp = b.defined() ? b.data<T>().data() : nullptr;
        T* yp = y.data<T>().data();
#pragma omp parallel for collapse(2) schedule(static)
        for (int64_t bi = 0; bi < g.batch; ++bi) {
            for (int64_t co = 0; co < g.cout; ++co) {
                const T* xb = xp + bi * g.cin * in_spatial;
                T* yb = yp + (bi * g.cout + co) * out_spatial;
                T bias = bp ? bp[co] : T(0);
                for (int64_t oz = 0; oz < g.out[0]; ++oz)
                    for (int64_t oy = 0; oy < g.out[1]; ++oy)
                        for (int64_t ox = 0; ox < g.out[2]; ++ox) {
                            T acc = bias;
                            for (int64_t kz = 0; kz < g.k[0]; ++kz) {
                                int64_t nz = oz - kz;
                                if (nz < 0 || nz % g.s[0]) continue;
                                int64_t iz = nz / g.s[0];
                                if (iz >= g.in[0]) continue;
                                for (int64_t ky = 0; ky < g.k[1]; ++ky) {
                                    int64_t ny = oy - ky;
                                    if (ny < 0 || ny % g.s[1]) continue;
                                    int64_t iy = ny / g.s[1];
                                    if (iy >= g.in[1]) continue;
                                    for (int64_t kx = 0; kx < g.k[2]; ++kx) {
                                        int64_t nx = ox - kx;
                                        if (nx < 0 || nx % g.s[2]) continue;
                                        int64_t ix = nx / g.s[2];
                                        if (ix >= g.in[2]) continue;
                                        int64_t koff = (kz * g.k[1] + ky) * g.k[2] + kx;
                                        int64_t xoff = (iz * g.in[1] + iy) * g.in[2] + ix;
                                        for (int64_t ci = 0; ci < g.cin; ++ci)
                                            acc += xb[ci * in_spatial + xoff] *
                                                   wp[(ci * g.cout + co) * ksize + koff];
                                    }
                                }
                            }
                            yb[(oz * g.out[1] + oy) * g.out[2] + ox] = acc;
                        }
            }
        }
    });
    std::vector<Tensor> inputs{x, w};
    if (b.defined()) inputs.push_back(b);
    if (autograd::should_record(inputs)) {
        Tensor xin = x, win = w, bin = b, yout = y;
        autograd::record(inputs, y, [xin, win, bin, yout, g, in_spatial, out_spatial, ksize]() mutable {
            dispatch_float(xin.dtype(), [&](auto tag) {
                using T = decltype(tag);
                const T* xp = xin.data<T>().data();
                const T* wp = win.data<T>().data();
                const T* gy = yout.grad<T>().data();
                if (xin.requires_grad()) {
                    xin.ensure_grad();
                    T* gx = xin.grad<T>().data();
                    // dx[b,ci,i] = sum_{co,k} dy[b,co,i*s+k] * w[ci,co,k]
#pragma omp parallel for collapse(2) schedule(static)
                    for (int64_t bi = 0; bi < g.batch; ++bi) {
                        for (int64_t ci = 0; ci < g.cin; ++ci) {
                            T* gxc = gx + (bi * g.cin + ci) * in_spatial;
                            for (int64_t iz = 0; iz < g.in[0]; ++iz)
                                for (int64_t iy = 0; iy < g.in[1]; ++iy)
                                    for (int64_t ix = 0; ix < g.in[2]; ++ix) {
                                        T acc = 0;
                                        for (int64_t co = 0; co < g.cout; ++co) {
                                            const T* gyb = gy + (bi * g.cout + co) * out_spatial;
                                            const T* wk = wp + (ci * g.cout + co) * ksize;
                                            for (int64_t kz = 0; kz < g.k[0]; ++kz)
                                                for (int64_t ky = 0; ky < g.k[1]; ++ky)
                                                    for (int64_t kx = 0; kx < g.k[2]; ++kx) {
                                                        int64_t oz = iz * g.s[0] + kz;
                                                        int64_t oy = iy * g.s[1] + ky;
                                                        int64_t ox = ix * g.s[2] + kx;
                                                        acc += gyb[(oz * g.out[1] + oy) * g.out[2] + ox] *
                                                               wk[(kz * g.k[1] + ky) * g.k[2] + kx];
                                                    }
                                        }
                                        gxc[(iz * g.in[1] + iy) * g.in[2] + ix] += acc;
                                    }
                        }
                    }
                }
                if (win.requires_grad()) {
                    win.ensure_grad();
                    T* gw = win.grad<T>().data();
#pragma omp parallel for collapse(2) schedule(static)
                    for (int64_t ci = 0; ci < g.cin; ++ci) {
                        for (int64_t co = 0; co < g.cout; ++co) {
                            T* gwk = gw + (ci * g.cout + co) * ksize;
                            for (int64_t bi = 0; bi < g.batch; ++bi) {
                                const T* xc = xp + (bi * g.cin + ci) * in_spatial;
                                const T* gyb = gy + (bi * g.cout + co) * out_spatial;
                                for (int64_t iz = 0; iz < g.in[0]; ++iz)
                                    for (int64_t iy = 0; iy < g.in[1]; ++iy)
                                        for (int64_t ix = 0; ix < g.in[2]; ++ix) {
                                            T xv = xc[(iz * g.in[1] + iy) * g.in[2] + ix];
                                            if (xv == T(0)) continue;
                                            for (int64_t kz = 0; kz < g.k[0]; ++kz)
                                                for (int64_t ky = 0; ky < g.k[1]; ++ky)
                                                    for (int64_t kx = 0; kx < g.k[2]; ++kx) {
                                                        int64_t oz = iz * g.s[0] + kz;
                                                        int64_t oy = iy * g.s[1] + ky;
                                                        int64_t ox = ix * g.s[2] + kx;
                                                        gwk[(kz * g.k[1] + ky) * g.k[2] + kx] +=
                                                            xv * gyb[(oz * g.out[1] + oy) * g.out[2] + ox];
                                                    }
                                        }
                            }
                        }
                    }
                }
                if (bin.defined() && bin.requires_grad()) {
                    bin.ensure_grad();
                    T* gb = bin.grad<T>().data();
                    for (int64_t bi = 0; bi < g.batch; ++bi)
                        for (int64_t co = 0; co < g.cout; ++co) {
                            const T* gyb = gy + (bi * g.cout + co) * out_spatial;
                            T acc = 0;
                            for (int64_t i = 0; i < out_spatial; ++i) acc += gyb[i];
                            gb[co] += acc;
                        }
                }
            });
        });
    }
    return y;
}

Tensor causal_conv1d(const Tensor& x, const Tensor& w, const Tensor& b) {
    require_float(x, "causal_conv1d");
    require_same_dtype(x, w, "causal_conv1d");
    if (x.rank() != 3) throw DimensionError(cat("causal_conv1d: input must be (B,L,C), got ", shape_str(x.shape())));
    if (w.rank() != 2) throw DimensionError(cat("causal_conv1d: weight must be (C,K), got ", shape_str(w.shape())));
    int64_t B = x.shape()[0], L = x.shape()[1], C = x.shape()[2], K = w.shape()[1];
    if (w.shape()[0] != C)
        throw DimensionError(cat("causal_conv1d: channel axis 2: input has ", C, ", weight has ", w.shape()[0]));
    if (b.rank() != 1 || b.shape()[0] != C)
        throw DimensionError(cat("causal_conv1d: bias shape ", shape_str(b.shape()), " vs channels ", C));
    Tensor y = Tensor::zeros(x.shape(), x.dtype());
    dispatch_float(x.dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* xp = x.data<T>().data();
        const T* wp = w.data<T>().data();
        const T* bp = b.data<T>().data();
        T* yp = y.data<T>().data();
#pragma omp parallel for schedule(static)
        for (int64_t bi = 0; bi < B; ++bi) {
            const T* xb = xp + bi * L * C;
            T* yb = yp + bi * L * C;
            for (int64_t t = 0; t < L; ++t)
                for (int64_t c = 0; c < C; ++c) {
                    T acc = bp[c];
                    for (int64_t j = 0; j < K; ++j) {
                        int64_t tt = t - (K - 1) + j;
                        if (tt < 0) continue;
                        acc += wp[c * K + j] * xb[tt * C + c];
                    }
                    yb[t * C + c] = acc;
                }
        }
    });
    if (autograd::should_record({x, w, b})) {
        Tensor xin = x, win = w, bin = b, yout = y;
        autograd::record({x, w, b}, y, [xin, win, bin, yout, B, L, C, K]() mutable {
            dispatch_float(xin.dtype(), [&](auto tag) {
                using T = decltype(tag);
                const T* xp = xin.data<T>().data();
                const T* wp = win.data<T>().data();
                const T* gy = yout.grad<T>().data();
                if (xin.requires_grad()) {
                    xin.ensure_grad();
                    T* gx = xin.grad<T>().data();
#pragma omp parallel for schedule(static)
                    for (int64_t bi = 0; bi < B; ++bi) {
                        const T* gyb = gy + bi * L * C;
                        T* gxb = gx + bi * L * C;
                        for (int64_t t = 0; t < L; ++t)
                            for (int64_t c = 0; c < C; ++c) {
                                T g = gyb[t * C + c];
                                if (g == T(0)) continue;
                                for (int64_t j = 0; j < K; ++j) {
                                    int64_t tt = t - (K - 1) + j;
                                    if (tt < 0) continue;
                                    gxb[tt * C + c] += g * wp[c * K + j];
                                }
                            }
                    }
                }
                if (win.requires_grad()) {
                    win.ensure_grad();
                    T* gw = win.grad<T>().data();
                    for (int64_t bi = 0; bi < B; ++bi) {
                        const T* xb = xp + bi * L * C;
                        const T* gyb = gy + bi * L * C;
                        for (int64_t t = 0; t < L; ++t)
                            for (int64_t c = 0; c < C; ++c) {
                                T g = gyb[t * C + c];
                                if (g == T(0)) continue;
                                for (int64_t j = 0; j < K; ++j) {
                                    int64_t tt = t - (K - 1) + j;
                                    if (tt < 0) continue;
                                    gw[c * K + j] += g * xb[tt * C + c];
                                }
                            }
                    }
                }
                if (bin.requires_grad()) {
                    bin.ensure_grad();
                    T* gb = bin.grad<T>().data();
                    for (int64_t bi = 0; bi < B; ++bi)
                        for (int64_t t = 0; t < L; ++t)
                            for (int64_t c = 0; c < C; ++c) gb[c] += gy[(bi * L + t) * C + c];
                }
            });
        });
    }
    return y;
}

}  // namespace umamba
