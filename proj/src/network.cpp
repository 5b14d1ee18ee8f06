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
#include "umamba/network.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace umamba {

using json = nlohmann::ordered_json;

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Bot: return "bot";
        case Variant::Enc: return "enc";
        case Variant::CnnBaseline: return "cnn_baseline";
    }
    return "?";
}

Variant variant_from_name(const std::string& s) {
    if (s == "bot") return Variant::Bot;
    if (s == "enc") return Variant::Enc;
    if (s == "cnn_baseline" || s == "cnn") return Variant::CnnBaseline;
    throw PlanError(cat("unknown variant '", s, "' (expected bot|enc|cnn)"));
}

void NetworkPlan::validate() const {
    size_t axes = patch_size.size();
    if (dimensionality != 2 && dimensionality != 3)
        throw PlanError(cat("plan: dimensionality ", dimensionality));
    if (axes != static_cast<size_t>(dimensionality))
        throw PlanError(cat("plan: patch rank ", axes, " vs dimensionality ", dimensionality));
    if (poolings_per_axis.size() != axes)
        throw PlanError(cat("plan: pooling rank ", poolings_per_axis.size(), " vs patch rank ", axes));
    int max_pool = 0;
    for (size_t a = 0; a < axes; ++a) {
        if (poolings_per_axis[a] < 0) throw PlanError("plan: negative pooling count");
        max_pool = std::max(max_pool, poolings_per_axis[a]);
        int64_t div = int64_t(1) << poolings_per_axis[a];
        if (patch_size[a] % div)
            throw PlanError(cat("plan: patch extent ", patch_size[a], " on axis ", a,
                                " not divisible by 2^", poolings_per_axis[a]));
    }
    if (n_stages != max_pool + 1)
        throw PlanError(cat("plan: n_stages ", n_stages, " vs max pooling + 1 = ", max_pool + 1));
    if (batch_size < 1) throw PlanError("plan: batch size must be >= 1");
    if (base_channels < 1) throw PlanError("plan: base channels must be >= 1");
    if (n_classes < 2) throw PlanError("plan: at least two classes required");
    if (in_channels < 1) throw PlanError("plan: in_channels must be >= 1");
}

int64_t NetworkPlan::stage_channels(int stage) const {
    int64_t c = base_channels << stage;
    return std::min(c, effective_max_channels());
}

std::vector<int64_t> NetworkPlan::stage_stride(int stage) const {
    std::vector<int64_t> s(patch_size.size(), 1);
    for (size_t a = 0; a < patch_size.size(); ++a)
        if (stage <= poolings_per_axis[a]) s[a] = 2;
    return s;
}

std::vector<std::vector<int64_t>> NetworkPlan::stage_extents() const {
    std::vector<std::vector<int64_t>> out;
    std::vector<int64_t> cur = patch_size;
    out.push_back(cur);
    for (int s = 1; s < n_stages; ++s) {
        auto st = stage_stride(s);
        for (size_t a = 0; a < cur.size(); ++a) cur[a] /= st[a];
        out.push_back(cur);
    }
    return out;
}

std::string NetworkPlan::to_json() const {
    json j;
    j["dimensionality"] = dimensionality;
    j["patch_size"] = patch_size;
    j["batch_size"] = batch_size;
    j["n_stages"] = n_stages;
    j["poolings_per_axis"] = poolings_per_axis;
    j["base_channels"] = base_channels;
    j["max_channels"] = effective_max_channels();
    j["in_channels"] = in_channels;
    j["n_classes"] = n_classes;
    j["variant"] = variant_name(variant);
    j["state_size"] = state_size;
    j["conv_width"] = conv_width;
    j["chunk_size"] = chunk_size;
    j["mamba_residual"] = mamba_residual;
    j["warnings"] = warnings;
    return j.dump(2) + "\n";
}

NetworkPlan NetworkPlan::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw IoError(cat("plan: unparseable json: ", e.what()));
    }
    NetworkPlan p;
    try {
        p.dimensionality = j.at("dimensionality").get<int>();
        p.patch_size = j.at("patch_size").get<std::vector<int64_t>>();
        p.batch_size = j.at("batch_size").get<int64_t>();
        p.n_stages = j.at("n_stages").get<int>();
        p.poolings_per_axis = j.at("poolings_per_axis").get<std::vector<int>>();
        p.base_channels = j.at("base_channels").get<int64_t>();
        p.max_channels = j.at("max_channels").get<int64_t>();
        p.in_channels = j.at("in_channels").get<int64_t>();
        p.n_classes = j.at("n_classes").get<int64_t>();
        p.variant = variant_from_name(j.at("variant").get<std::string>());
        p.state_size = j.value("state_size", SsmDefaults::state_size);
        p.conv_width = j.value("conv_width", SsmDefaults::conv_width);
        p.chunk_size = j.value("chunk_size", SsmDefaults::chunk_size);
        p.mamba_residual = j.value("mamba_residual", true);
        if (j.contains("warnings")) p.warnings = j["warnings"].get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw IoError(cat("plan: missing or mistyped field: ", e.what()));
    }
    p.validate();
    return p;
}

// ---- Network ----------------------------------------------------------------

Tensor Network::EncoderStage::forward(const Tensor& x) const {
    if (umamba) return umamba->forward(x);
    return res_b->forward(res_a->forward(x));
}

Network::Network(const NetworkPlan& plan, DType dt, uint64_t seed) : plan_(plan), dtype_(dt) {
    plan_.validate();
    Rng rng(seed);
    int rankd = plan_.dimensionality;
    const int n = plan_.n_stages;
    for (int s = 0; s < n; ++s) {
        int64_t cin = s == 0 ? plan_.in_channels : plan_.stage_channels(s - 1);
        int64_t cout = plan_.stage_channels(s);
        std::vector<int64_t> stride =
            s == 0 ? std::vector<int64_t>(static_cast<size_t>(rankd), 1) : plan_.stage_stride(s);
        bool use_umamba = plan_.variant == Variant::Enc || (plan_.variant == Variant::Bot && s == n - 1);
        EncoderStage stage;
        ResidualBlockCfg rc;
        rc.spatial_rank = rankd;
        rc.channels_in = cin;
        rc.channels_out = cout;
        rc.stride = stride;
        if (use_umamba) {
            UMambaBlockCfg uc;
            uc.res = rc;
            uc.mamba.state_size = plan_.state_size;
            uc.mamba.conv_width = plan_.conv_width;
            uc.mamba.chunk_size = plan_.chunk_size;
            uc.residual_around_mamba = plan_.mamba_residual;
            stage.umamba = std::make_unique<UMambaBlock>(uc, dt, rng);
        } else {
            stage.res_a = std::make_unique<ResidualBlock>(rc, dt, rng);
            ResidualBlockCfg rc2 = rc;
            rc2.channels_in = cout;
            rc2.stride.assign(static_cast<size_t>(rankd), 1);
            stage.res_b = std::make_unique<ResidualBlock>(rc2, dt, rng);
        }
        encoder_.push_back(std::move(stage));
    }
    for (int s = n - 1; s >= 1; --s) {
        DecoderStage d;
        int64_t cdeep = plan_.stage_channels(s);
        int64_t cskip = plan_.stage_channels(s - 1);
        d.up_stride = plan_.stage_stride(s);
        std::vector<int64_t> wshape{cdeep, cskip};
        for (int64_t st : d.up_stride) wshape.push_back(st);  // kernel = stride
        d.up_w = Tensor::zeros(wshape, dt);
        d.up_w.set_requires_grad(true);
        init_conv_kaiming(d.up_w, rng, 0.01);
        d.up_b = Tensor::zeros({cskip}, dt);
        d.up_b.set_requires_grad(true);
        ResidualBlockCfg rc;
        rc.spatial_rank = rankd;
        rc.channels_in = 2 * cskip;  // concatenated skip
        rc.channels_out = cskip;
        d.res_a = std::make_unique<ResidualBlock>(rc, dt, rng);
        ResidualBlockCfg rc2 = rc;
        rc2.channels_in = cskip;
        d.res_b = std::make_unique<ResidualBlock>(rc2, dt, rng);
        decoder_.push_back(std::move(d));
    }
    std::vector<int64_t> hshape{plan_.n_classes, plan_.stage_channels(0)};
    for (int a = 0; a < rankd; ++a) hshape.push_back(1);
    head_w_ = Tensor::zeros(hshape, dt);
    head_w_.set_requires_grad(true);
    init_conv_kaiming(head_w_, rng, 0.01);
    head_b_ = Tensor::zeros({plan_.n_classes}, dt);
    head_b_.set_requires_grad(true);
    // Build-time shape audit: every stage extent must stay integral and the
    // decoder must mirror the encoder exactly; stage_extents() throws on a
    // bad plan and the concat below re-checks at runtime.
    (void)plan_.stage_extents();
}

Tensor Network::forward(const Tensor& x) const {
    if (x.rank() != plan_.dimensionality + 2)
        throw DimensionError(cat("network: input rank ", x.rank(), " vs expected ", plan_.dimensionality + 2));
    if (x.shape()[1] != plan_.in_channels)
        throw DimensionError(cat("network: channel axis 1: got ", x.shape()[1], ", expected ", plan_.in_channels));
    for (int a = 0; a < plan_.dimensionality; ++a)
        if (x.shape()[2 + a] != plan_.patch_size[a])
            throw DimensionError(cat("network: spatial axis ", 2 + a, ": got ", x.shape()[2 + a],
                                     ", plan patch is ", plan_.patch_size[a]));
    std::vector<Tensor> skips;
    Tensor h = x;
    for (size_t s = 0; s < encoder_.size(); ++s) {
        h = encoder_[s].forward(h);
        if (s + 1 < encoder_.size()) skips.push_back(h);
    }
    last_bottleneck_.assign(h.shape().begin() + 2, h.shape().end());
    for (size_t d = 0; d < decoder_.size(); ++d) {
        const DecoderStage& dec = decoder_[d];
        h = conv_transpose(h, dec.up_w, dec.up_b, dec.up_stride);
        const Tensor& skip = skips[skips.size() - 1 - d];
        h = concat(skip, h, 1);
        h = dec.res_b->forward(dec.res_a->forward(h));
    }
    std::vector<int64_t> ones(static_cast<size_t>(plan_.dimensionality), 1);
    std::vector<int64_t> zeros(static_cast<size_t>(plan_.dimensionality), 0);
    Tensor logits = conv(h, head_w_, head_b_, ones, zeros);
    return softmax(logits, 1);
}

ParamList Network::parameters() const {
    ParamList out;
    for (size_t s = 0; s < encoder_.size(); ++s) {
        std::string prefix = cat("encoder.", s);
        if (encoder_[s].umamba) {
            encoder_[s].umamba->collect_parameters(prefix, out);
        } else {
            encoder_[s].res_a->collect_parameters(prefix + ".res1", out);
            encoder_[s].res_b->collect_parameters(prefix + ".res2", out);
        }
    }
    for (size_t d = 0; d < decoder_.size(); ++d) {
        std::string prefix = cat("decoder.", d);
        out.add(prefix + ".up.w", decoder_[d].up_w);
        out.add(prefix + ".up.b", decoder_[d].up_b);
        decoder_[d].res_a->collect_parameters(prefix + ".res1", out);
        decoder_[d].res_b->collect_parameters(prefix + ".res2", out);
    }
    out.add("head.w", head_w_);
    out.add("head.b", head_b_);
    return out;
}

void Network::zero_grads() {
    for (auto& [name, t] : parameters().items) {
        Tensor tt = t;
        tt.zero_grad();
    }
}

void Network::post_step_clamp() {
    for (auto& stage : encoder_)
        if (stage.umamba) stage.umamba->clamp_state_matrix();
}

Tensor argmax_channel(const Tensor& probs) {
    if (probs.rank() < 2) throw DimensionError("argmax: (K, spatial...) tensor required");
    int64_t k = probs.shape()[0];
    int64_t m = probs.numel() / k;
    std::vector<int64_t> out_shape(probs.shape().begin() + 1, probs.shape().end());
    Tensor out = Tensor::zeros(out_shape, DType::U8);
    auto op = out.data<uint8_t>();
    for (int64_t i = 0; i < m; ++i) {
        double best = probs.get_flat(i);
        uint8_t best_k = 0;
        for (int64_t c = 1; c < k; ++c) {
            double v = probs.get_flat(c * m + i);
            if (v > best) {
                best = v;
                best_k = static_cast<uint8_t>(c);
            }
        }
        op[i] = best_k;
    }
    return out;
}

namespace {

// reflect-101 mirroring (no edge repeat), handles any overshoot
int64_t mirror_index(int64_t i, int64_t n) {
    if (n == 1) return 0;
    int64_t period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

std::vector<int64_t> window_starts(int64_t extent, int64_t patch, double overlap) {
    int64_t step = std::max<int64_t>(1, static_cast<int64_t>(std::llround(patch * (1.0 - overlap))));
    std::vector<int64_t> starts;
    for (int64_t s = 0;; s += step) {
        if (s + patch >= extent) {
            starts.push_back(extent - patch);
            break;
        }
        starts.push_back(s);
    }
    return starts;
}

}  // namespace

Tensor Network::predict_probs_sliding(const Tensor& image, double overlap, bool gaussian) const {
    NoGradGuard no_grad;
    int rankd = plan_.dimensionality;
    if (image.rank() != rankd + 1)
        throw DimensionError(cat("predict: image must be (channels, spatial...), got ", shape_str(image.shape())));
    if (image.shape()[0] != plan_.in_channels)
        throw DimensionError(cat("predict: image has ", image.shape()[0], " channels, plan wants ", plan_.in_channels));
    if (overlap < 0.0 || overlap >= 1.0) throw ContractError("predict: overlap must be in [0,1)");

    // Reflect-pad axes smaller than the patch.
    std::vector<int64_t> orig(image.shape().begin() + 1, image.shape().end());
    std::vector<int64_t> padded = orig;
    std::vector<int64_t> pad_before(static_cast<size_t>(rankd), 0);
    bool needs_pad = false;
    for (int a = 0; a < rankd; ++a) {
        if (orig[a] < plan_.patch_size[a]) {
            padded[a] = plan_.patch_size[a];
            pad_before[a] = (padded[a] - orig[a]) / 2;
            needs_pad = true;
        }
    }
    Tensor img = image;
    if (needs_pad) {
        std::vector<int64_t> pshape{plan_.in_channels};
        pshape.insert(pshape.end(), padded.begin(), padded.end());
        Tensor p = Tensor::zeros(pshape, image.dtype());
        int64_t total = p.numel() / plan_.in_channels;
        for (int64_t c = 0; c < plan_.in_channels; ++c) {
            for (int64_t flat = 0; flat < total; ++flat) {
                auto idx = unravel_index(flat, padded);
                std::vector<int64_t> src(static_cast<size_t>(rankd));
                for (int a = 0; a < rankd; ++a) src[a] = mirror_index(idx[a] - pad_before[a], orig[a]);
                std::vector<int64_t> sidx{c};
                sidx.insert(sidx.end(), src.begin(), src.end());
                std::vector<int64_t> didx{c};
                didx.insert(didx.end(), idx.begin(), idx.end());
                p.set(didx, image.get(sidx));
            }
        }
        img = p;
    }

    // Per-axis window weights.
    std::vector<std::vector<double>> axis_w(static_cast<size_t>(rankd));
    for (int a = 0; a < rankd; ++a) {
        int64_t pa = plan_.patch_size[a];
        axis_w[a].assign(static_cast<size_t>(pa), 1.0);
        if (gaussian) {
            double sigma = static_cast<double>(pa) / 8.0;
            double c = (static_cast<double>(pa) - 1.0) / 2.0;
            for (int64_t i = 0; i < pa; ++i)
                axis_w[a][static_cast<size_t>(i)] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
        }
    }

    std::vector<std::vector<int64_t>> starts(static_cast<size_t>(rankd));
    for (int a = 0; a < rankd; ++a) starts[a] = window_starts(padded[a], plan_.patch_size[a], overlap);

    int64_t vox = 1;
    for (int64_t e : padded) vox *= e;
    std::vector<double> acc(static_cast<size_t>(plan_.n_classes * vox), 0.0);
    std::vector<double> wsum(static_cast<size_t>(vox), 0.0);
    auto padded_strides = row_major_strides(padded);
    int64_t patch_vox = 1;
    for (int64_t e : plan_.patch_size) patch_vox *= e;

    // Fixed window order keeps the accumulation deterministic.
    std::vector<size_t> cursor(static_cast<size_t>(rankd), 0);
    while (true) {
        std::vector<int64_t> origin(static_cast<size_t>(rankd));
        for (int a = 0; a < rankd; ++a) origin[a] = starts[a][cursor[a]];
        // crop window
        std::vector<int64_t> wshape{1, plan_.in_channels};
        wshape.insert(wshape.end(), plan_.patch_size.begin(), plan_.patch_size.end());
        Tensor win = Tensor::zeros(wshape, img.dtype());
        for (int64_t c = 0; c < plan_.in_channels; ++c)
            for (int64_t flat = 0; flat < patch_vox; ++flat) {
                auto idx = unravel_index(flat, plan_.patch_size);
                int64_t off = 0;
                for (int a = 0; a < rankd; ++a) off += (origin[a] + idx[a]) * padded_strides[a];
                win.set_flat(c * patch_vox + flat, img.get_flat(c * vox + off));
            }
        Tensor probs = forward(win);  // (1, K, patch...)
        for (int64_t flat = 0; flat < patch_vox; ++flat) {
            auto idx = unravel_index(flat, plan_.patch_size);
            double w = 1.0;
            for (int a = 0; a < rankd; ++a) w *= axis_w[a][static_cast<size_t>(idx[a])];
            int64_t off = 0;
            for (int a = 0; a < rankd; ++a) off += (origin[a] + idx[a]) * padded_strides[a];
            for (int64_t k = 0; k < plan_.n_classes; ++k)
                acc[static_cast<size_t>(k * vox + off)] += w * probs.get_flat(k * patch_vox + flat);
            wsum[static_cast<size_t>(off)] += w;
        }
        // advance cursor
        int a = rankd - 1;
        for (; a >= 0; --a) {
            if (++cursor[a] < starts[a].size()) break;
            cursor[a] = 0;
        }
        if (a < 0) break;
    }

    // Normalize and crop back to the original extent.
    std::vector<int64_t> oshape{plan_.n_classes};
    oshape.insert(oshape.end(), orig.begin(), orig.end());
    Tensor out = Tensor::zeros(oshape, DType::F32);
    int64_t ovox = 1;
    for (int64_t e : orig) ovox *= e;
    for (int64_t flat = 0; flat < ovox; ++flat) {
        auto idx = unravel_index(flat, orig);
        int64_t off = 0;
        for (int a = 0; a < rankd; ++a) off += (idx[a] + pad_before[a]) * padded_strides[a];
        double w = wsum[static_cast<size_t>(off)];
        for (int64_t k = 0; k < plan_.n_classes; ++k)
            out.set_flat(k * ovox + flat, acc[static_cast<size_t>(k * vox + off)] / w);
    }
    return out;
}

Tensor Network::predict_labels_sliding(const Tensor& image, double overlap, bool gaussian) const {
    return argmax_channel(predict_probs_sliding(image, overlap, gaussian));
}

}  // namespace umamba
