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
#include "umamba/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <queue>

namespace umamba {

namespace {

void require_same_grid(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw DimensionError(cat(op, ": mask shapes differ: ", shape_str(a.shape()), " vs ",
                                 shape_str(b.shape())));
}

bool in_mask_flat(const Tensor& t, int64_t i, int cls) {
    return cls < 0 ? t.get_flat(i) != 0.0 : static_cast<int>(t.get_flat(i)) == cls;
}

double dsc_impl(const Tensor& pred, const Tensor& gt, int cls) {
    require_same_grid(pred, gt, "dsc");
    int64_t n = pred.numel();
    int64_t np = 0, ng = 0, ni = 0;
    for (int64_t i = 0; i < n; ++i) {
        bool p = in_mask_flat(pred, i, cls);
        bool g = in_mask_flat(gt, i, cls);
        np += p;
        ng += g;
        ni += (p && g);
    }
    if (np + ng == 0) return 1.0;
    return 2.0 * static_cast<double>(ni) / static_cast<double>(np + ng);
}

/// Boundary voxel coordinates of a mask (face connectivity, out-of-image
/// counts as background).
std::vector<std::vector<int64_t>> boundary_voxels(const Tensor& mask, int cls) {
    const auto& shape = mask.shape();
    int r = static_cast<int>(shape.size());
    auto strides = row_major_strides(shape);
    int64_t n = mask.numel();
    std::vector<std::vector<int64_t>> out;
    for (int64_t i = 0; i < n; ++i) {
        if (!in_mask_flat(mask, i, cls)) continue;
        auto idx = unravel_index(i, shape);
        bool boundary = false;
        for (int a = 0; a < r && !boundary; ++a) {
            for (int d = -1; d <= 1 && !boundary; d += 2) {
                int64_t v = idx[a] + d;
                if (v < 0 || v >= shape[a]) {
                    boundary = true;
                } else {
                    if (!in_mask_flat(mask, i + d * strides[a], cls)) boundary = true;
                }
            }
        }
        if (boundary) out.push_back(idx);
    }
    return out;
}

double nsd_impl(const Tensor& pred, const Tensor& gt, int cls, double tau, std::vector<double> spacing) {
    require_same_grid(pred, gt, "nsd");
    if (tau <= 0) throw ContractError("nsd: tolerance must be positive");
    if (spacing.empty()) spacing.assign(pred.shape().size(), 1.0);
    if (spacing.size() != pred.shape().size()) throw DimensionError("nsd: spacing rank vs mask rank");
    for (double s : spacing)
        if (s <= 0) throw ContractError("nsd: spacing must be positive");
    auto bp = boundary_voxels(pred, cls);
    auto bg = boundary_voxels(gt, cls);
    if (bp.empty() && bg.empty()) return 1.0;
    if (bp.empty() || bg.empty()) return 0.0;
    auto count_within = [&](const std::vector<std::vector<int64_t>>& from,
                            const std::vector<std::vector<int64_t>>& to) {
        int64_t hits = 0;
        double tau2 = tau * tau;
        for (const auto& p : from) {
            double best = 1e300;
            for (const auto& q : to) {
                double d2 = 0.0;
                for (size_t a = 0; a < p.size(); ++a) {
                    double d = (static_cast<double>(p[a]) - static_cast<double>(q[a])) * spacing[a];
                    d2 += d * d;
                }
                best = std::min(best, d2);
                if (best == 0.0) break;
            }
            if (best <= tau2) ++hits;
        }
        return hits;
    };
    int64_t hits_p = count_within(bp, bg);
    int64_t hits_g = count_within(bg, bp);
    return static_cast<double>(hits_p + hits_g) / static_cast<double>(bp.size() + bg.size());
}

}  // namespace

double dsc(const Tensor& pred, const Tensor& gt) { return dsc_impl(pred, gt, -1); }
double dsc_class(const Tensor& pred, const Tensor& gt, int cls) { return dsc_impl(pred, gt, cls); }

double nsd(const Tensor& pred, const Tensor& gt, double tau, const std::vector<double>& spacing) {
    return nsd_impl(pred, gt, -1, tau, spacing);
}
double nsd_class(const Tensor& pred, const Tensor& gt, int cls, double tau, const std::vector<double>& spacing) {
    return nsd_impl(pred, gt, cls, tau, spacing);
}

InstanceMap instances_from_semantic(const Tensor& semantic, int64_t min_size, double assign_radius) {
    if (semantic.rank() != 2)
        throw DimensionError(cat("instances_from_semantic: 2-d map required, got ", shape_str(semantic.shape())));
    int64_t H = semantic.shape()[0], W = semantic.shape()[1];
    InstanceMap out;
    out.shape = {H, W};
    out.labels.assign(static_cast<size_t>(H * W), 0);
    auto cls_at = [&](int64_t i) { return static_cast<int>(semantic.get_flat(i)); };

    // 4-connected components over the interior class.
    int32_t next_label = 0;
    std::vector<int64_t> stack;
    std::vector<std::vector<int64_t>> members;
    for (int64_t i = 0; i < H * W; ++i) {
        if (cls_at(i) != 1 || out.labels[static_cast<size_t>(i)] != 0) continue;
        ++next_label;
        members.emplace_back();
        stack.push_back(i);
        out.labels[static_cast<size_t>(i)] = next_label;
        while (!stack.empty()) {
            int64_t cur = stack.back();
            stack.pop_back();
            members.back().push_back(cur);
            int64_t y = cur / W, x = cur % W;
            const int64_t ny[4] = {y - 1, y + 1, y, y};
            const int64_t nx[4] = {x, x, x - 1, x + 1};
            for (int d = 0; d < 4; ++d) {
                if (ny[d] < 0 || ny[d] >= H || nx[d] < 0 || nx[d] >= W) continue;
                int64_t j = ny[d] * W + nx[d];
                if (cls_at(j) == 1 && out.labels[static_cast<size_t>(j)] == 0) {
                    out.labels[static_cast<size_t>(j)] = next_label;
                    stack.push_back(j);
                }
            }
        }
    }
    // Drop undersized components, then renumber densely in first-seen order.
    std::vector<int32_t> remap(static_cast<size_t>(next_label) + 1, 0);
    int32_t kept = 0;
    for (int32_t lab = 1; lab <= next_label; ++lab) {
        if (static_cast<int64_t>(members[static_cast<size_t>(lab - 1)].size()) >= min_size)
            remap[static_cast<size_t>(lab)] = ++kept;
        else
            for (int64_t i : members[static_cast<size_t>(lab - 1)]) out.labels[static_cast<size_t>(i)] = 0;
    }
    for (auto& l : out.labels)
        if (l > 0) l = remap[static_cast<size_t>(l)];
    out.count = kept;

    // Boundary pixels join the nearest surviving component within the radius.
    int64_t rad = static_cast<int64_t>(std::ceil(assign_radius));
    for (int64_t i = 0; i < H * W; ++i) {
        if (cls_at(i) != 2) continue;
        int64_t y = i / W, x = i % W;
        double best_d2 = assign_radius * assign_radius + 1e-9;
        int32_t best_lab = 0;
        for (int64_t dy = -rad; dy <= rad; ++dy) {
            for (int64_t dx = -rad; dx <= rad; ++dx) {
                int64_t yy = y + dy, xx = x + dx;
                if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
                int32_t lab = out.labels[static_cast<size_t>(yy * W + xx)];
                if (lab == 0 || cls_at(yy * W + xx) == 2) continue;
                double d2 = static_cast<double>(dy * dy + dx * dx);
                if (d2 < best_d2 || (d2 == best_d2 && lab < best_lab) || (d2 == best_d2 && best_lab == 0)) {
                    best_d2 = d2;
                    best_lab = lab;
                }
            }
        }
        if (best_lab > 0) out.labels[static_cast<size_t>(i)] = best_lab;
    }
    return out;
}

F1Result f1_instance(const InstanceMap& pred, const InstanceMap& gt, double iou_threshold) {
    if (pred.shape != gt.shape) throw DimensionError("f1_instance: instance maps on different grids");
    if (iou_threshold <= 0.0 || iou_threshold >= 1.0)
        throw ContractError("f1_instance: threshold must be in (0,1)");
    int32_t np = pred.count, ng = gt.count;
    F1Result r;
    if (np == 0 && ng == 0) {
        r.precision = r.recall = r.f1 = 1.0;
        return r;
    }
    std::vector<int64_t> area_p(static_cast<size_t>(np) + 1, 0), area_g(static_cast<size_t>(ng) + 1, 0);
    std::map<std::pair<int32_t, int32_t>, int64_t> inter;
    for (size_t i = 0; i < pred.labels.size(); ++i) {
        int32_t p = pred.labels[i], g = gt.labels[i];
        if (p > 0) ++area_p[static_cast<size_t>(p)];
        if (g > 0) ++area_g[static_cast<size_t>(g)];
        if (p > 0 && g > 0) ++inter[{p, g}];
    }
    struct Cand {
        double iou;
        int32_t p, g;
    };
    std::vector<Cand> cands;
    for (const auto& [pg, ov] : inter) {
        double u = static_cast<double>(area_p[static_cast<size_t>(pg.first)] +
                                       area_g[static_cast<size_t>(pg.second)] - ov);
        double iou = static_cast<double>(ov) / u;
        if (iou >= iou_threshold) cands.push_back({iou, pg.first, pg.second});
    }
    // Greedy by descending IoU; ties broken by (pred id, gt id) for
    // determinism.
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.p != b.p) return a.p < b.p;
        return a.g < b.g;
    });
    std::vector<bool> used_p(static_cast<size_t>(np) + 1, false), used_g(static_cast<size_t>(ng) + 1, false);
    int64_t tp = 0;
    for (const auto& c : cands) {
        if (used_p[static_cast<size_t>(c.p)] || used_g[static_cast<size_t>(c.g)]) continue;
        used_p[static_cast<size_t>(c.p)] = used_g[static_cast<size_t>(c.g)] = true;
        ++tp;
    }
    r.tp = tp;
    r.fp = np - tp;
    r.fn = ng - tp;
    r.precision = np ? static_cast<double>(tp) / np : (ng ? 0.0 : 1.0);
    r.recall = ng ? static_cast<double>(tp) / ng : (np ? 0.0 : 1.0);
    r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s2 = 0.0;
    for (double x : v) s2 += (x - m) * (x - m);
    double sd = v.size() > 1 ? std::sqrt(s2 / static_cast<double>(v.size() - 1)) : 0.0;
    return {m, sd};
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

double EvalReport::mean_dsc() const {
    std::vector<double> v;
    for (const auto& r : semantic_rows) v.push_back(r.dsc);
    return mean_sd(v).first;
}

double EvalReport::mean_nsd() const {
    std::vector<double> v;
    for (const auto& r : semantic_rows) v.push_back(r.nsd);
    return mean_sd(v).first;
}

double EvalReport::mean_f1() const {
    std::vector<double> v;
    for (const auto& r : instance_rows) v.push_back(r.f1);
    return mean_sd(v).first;
}

std::string EvalReport::to_text() const {
    std::ostringstream os;
    if (instance_task) {
        os << "# case f1 precision recall\n";
        std::vector<double> f1s, ps, rs;
        for (const auto& r : instance_rows) {
            os << r.case_id << " " << fmt(r.f1) << " " << fmt(r.precision) << " " << fmt(r.recall) << "\n";
            f1s.push_back(r.f1);
            ps.push_back(r.precision);
            rs.push_back(r.recall);
        }
        auto [mf, sf] = mean_sd(f1s);
        auto [mp, sp] = mean_sd(ps);
        auto [mr, sr] = mean_sd(rs);
        os << "aggregate mean " << fmt(mf) << " " << fmt(mp) << " " << fmt(mr) << " sd " << fmt(sf) << " "
           << fmt(sp) << " " << fmt(sr) << "\n";
    } else {
        os << "# case class dsc nsd\n";
        std::vector<double> ds, ns;
        for (const auto& r : semantic_rows) {
            os << r.case_id << " " << r.cls << " " << fmt(r.dsc) << " " << fmt(r.nsd) << "\n";
            ds.push_back(r.dsc);
            ns.push_back(r.nsd);
        }
        auto [md, sd_] = mean_sd(ds);
        auto [mn, sn] = mean_sd(ns);
        os << "aggregate mean " << fmt(md) << " " << fmt(mn) << " sd " << fmt(sd_) << " " << fmt(sn) << "\n";
    }
    return os.str();
}

}  // namespace umamba
