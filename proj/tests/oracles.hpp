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
#ifndef UMAMBA_TESTS_ORACLES_HPP
#define UMAMBA_TESTS_ORACLES_HPP

// Independent brute-force oracles. Deliberately written as plain loops over
// the mathematical definitions, sharing no kernel code with the library.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "umamba/tensor.hpp"

namespace oracle {

using umamba::Tensor;

/// Six-nested-loop 2-D cross-correlation, float64.
inline Tensor conv2d_loops(const Tensor& x, const Tensor& w, const Tensor& b, int64_t stride,
                           int64_t pad) {
    int64_t B = x.shape()[0], Ci = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
    int64_t Co = w.shape()[0], kh = w.shape()[2], kw = w.shape()[3];
    int64_t OH = (H + 2 * pad - kh) / stride + 1;
    int64_t OW = (W + 2 * pad - kw) / stride + 1;
    Tensor y = Tensor::zeros({B, Co, OH, OW}, umamba::DType::F64);
    for (int64_t bi = 0; bi < B; ++bi)
        for (int64_t co = 0; co < Co; ++co)
            for (int64_t oy = 0; oy < OH; ++oy)
                for (int64_t ox = 0; ox < OW; ++ox) {
                    double acc = b.get({co});
                    for (int64_t ci = 0; ci < Ci; ++ci)
                        for (int64_t ky = 0; ky < kh; ++ky)
                            for (int64_t kx = 0; kx < kw; ++kx) {
                                int64_t iy = oy * stride - pad + ky;
                                int64_t ix = ox * stride - pad + kx;
                                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                                acc += x.get({bi, ci, iy, ix}) * w.get({co, ci, ky, kx});
                            }
                    y.set({bi, co, oy, ox}, acc);
                }
    return y;
}

/// Unrolled quadratic-form scan: h_t = sum_{s<=t} (prod_{r=s+1..t} abar_r) bbar_s u_s.
/// O(L^2) on purpose; a completely different route to the same recurrence.
inline Tensor scan_quadratic(const Tensor& u, const Tensor& delta, const Tensor& A, const Tensor& Bt,
                             const Tensor& Ct, const Tensor& D) {
    int64_t B = u.shape()[0], L = u.shape()[1], C = u.shape()[2], N = A.shape()[1];
    Tensor y = Tensor::zeros({B, L, C}, umamba::DType::F64);
    for (int64_t b = 0; b < B; ++b)
        for (int64_t c = 0; c < C; ++c)
            for (int64_t t = 0; t < L; ++t) {
                double acc = 0.0;
                for (int64_t n = 0; n < N; ++n) {
                    double a = A.get({c, n});
                    double h = 0.0;
                    for (int64_t s = 0; s <= t; ++s) {
                        double term = delta.get({b, s, c}) * Bt.get({b, s, n}) * u.get({b, s, c});
                        for (int64_t r = s + 1; r <= t; ++r) term *= std::exp(delta.get({b, r, c}) * a);
                        h += term;
                    }
                    acc += Ct.get({b, t, n}) * h;
                }
                y.set({b, t, c}, acc + D.get({c}) * u.get({b, t, c}));
            }
    return y;
}

/// Set-counting Dice on label equality.
inline double dsc_bruteforce(const std::vector<uint8_t>& p, const std::vector<uint8_t>& g, int cls) {
    long np = 0, ng = 0, ni = 0;
    for (size_t i = 0; i < p.size(); ++i) {
        bool a = cls < 0 ? p[i] != 0 : p[i] == cls;
        bool b = cls < 0 ? g[i] != 0 : g[i] == cls;
        np += a;
        ng += b;
        ni += a && b;
    }
    if (np + ng == 0) return 1.0;
    return 2.0 * ni / double(np + ng);
}

/// NSD with erosion-style boundary extraction (mask minus its face-neighbor
/// erosion) and a full double loop over boundary pairs.
inline double nsd_bruteforce(const std::vector<uint8_t>& p, const std::vector<uint8_t>& g,
                             const std::vector<int64_t>& shape, double tau,
                             std::vector<double> spacing = {}) {
    if (spacing.empty()) spacing.assign(shape.size(), 1.0);
    auto strides = umamba::row_major_strides(shape);
    auto boundary = [&](const std::vector<uint8_t>& m) {
        std::vector<std::vector<int64_t>> pts;
        for (size_t i = 0; i < m.size(); ++i) {
            if (!m[i]) continue;
            auto idx = umamba::unravel_index(static_cast<int64_t>(i), shape);
            bool eroded = true;  // stays true only if all face neighbors are inside
            for (size_t a = 0; a < shape.size() && eroded; ++a)
                for (int d = -1; d <= 1 && eroded; d += 2) {
                    int64_t v = idx[a] + d;
                    if (v < 0 || v >= shape[a])
                        eroded = false;
                    else if (!m[i + static_cast<size_t>(d * strides[a])])
                        eroded = false;
                }
            if (!eroded) pts.push_back(idx);
        }
        return pts;
    };
    auto bp = boundary(p);
    auto bg = boundary(g);
    if (bp.empty() && bg.empty()) return 1.0;
    if (bp.empty() || bg.empty()) return 0.0;
    auto hits = [&](const auto& from, const auto& to) {
        long n = 0;
        for (const auto& a : from) {
            double best = 1e300;
            for (const auto& b : to) {
                double d2 = 0.0;
                for (size_t ax = 0; ax < shape.size(); ++ax) {
                    double d = (double(a[ax]) - double(b[ax])) * spacing[ax];
                    d2 += d * d;
                }
                best = std::min(best, d2);
            }
            if (std::sqrt(best) <= tau) ++n;
        }
        return n;
    };
    return double(hits(bp, bg) + hits(bg, bp)) / double(bp.size() + bg.size());
}

struct F1Scores {
    double precision, recall, f1;
};

/// Greedy instance matching, maximally dumb: rescan all pairs for the best
/// remaining IoU each round (no sorting, no maps).
inline F1Scores f1_bruteforce(const std::vector<int32_t>& pred, const std::vector<int32_t>& gt,
                              int32_t npred, int32_t ngt, double thr) {
    if (npred == 0 && ngt == 0) return {1.0, 1.0, 1.0};
    std::vector<char> used_p(size_t(npred) + 1, 0), used_g(size_t(ngt) + 1, 0);
    long tp = 0;
    auto iou = [&](int32_t a, int32_t b) {
        long inter = 0, uni = 0;
        for (size_t i = 0; i < pred.size(); ++i) {
            bool pa = pred[i] == a, gb = gt[i] == b;
            inter += pa && gb;
            uni += pa || gb;
        }
        return uni ? double(inter) / double(uni) : 0.0;
    };
    while (true) {
        double best = -1.0;
        int32_t bp = 0, bg = 0;
        for (int32_t a = 1; a <= npred; ++a) {
            if (used_p[size_t(a)]) continue;
            for (int32_t b = 1; b <= ngt; ++b) {
                if (used_g[size_t(b)]) continue;
                double v = iou(a, b);
                if (v > best + 1e-15) {
                    best = v;
                    bp = a;
                    bg = b;
                }
            }
        }
        if (bp == 0 || best < thr) break;
        used_p[size_t(bp)] = used_g[size_t(bg)] = 1;
        ++tp;
    }
    double prec = npred ? double(tp) / npred : (ngt ? 0.0 : 1.0);
    double rec = ngt ? double(tp) / ngt : (npred ? 0.0 : 1.0);
    double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    return {prec, rec, f1};
}

/// Direct transcription of the compound loss formulas.
inline double dice_ce_bruteforce(const Tensor& probs, const Tensor& target, double smooth) {
    int64_t B = probs.shape()[0], K = probs.shape()[1];
    int64_t M = probs.numel() / (B * K);
    double dice = 0.0;
    for (int64_t k = 0; k < K; ++k) {
        double spt = 0.0, sp = 0.0, st = 0.0;
        for (int64_t b = 0; b < B; ++b)
            for (int64_t v = 0; v < M; ++v) {
                double pv = probs.get_flat((b * K + k) * M + v);
                bool tv = static_cast<int64_t>(target.get_flat(b * M + v)) == k;
                sp += pv;
                st += tv;
                spt += tv ? pv : 0.0;
            }
        dice += 1.0 - (2.0 * spt + smooth) / (sp + st + smooth);
    }
    dice /= double(K);
    double ce = 0.0;
    for (int64_t b = 0; b < B; ++b)
        for (int64_t v = 0; v < M; ++v) {
            int64_t t = static_cast<int64_t>(target.get_flat(b * M + v));
            ce -= std::log(probs.get_flat((b * K + t) * M + v));
        }
    ce /= double(B * M);
    return dice + ce;
}

}  // namespace oracle

#endif
