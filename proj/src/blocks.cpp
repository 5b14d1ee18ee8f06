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
#include "umamba/blocks.hpp"

#include <cmath>

namespace umamba {

void init_conv_kaiming(Tensor& w, Rng& rng, double leaky_slope) {
    // fan_in = Cin * prod(kernel); gain for leaky relu
    const auto& s = w.shape();
    int64_t fan_in = 1;
    for (size_t a = 1; a < s.size(); ++a) fan_in *= s[a];
    double gain = std::sqrt(2.0 / (1.0 + leaky_slope * leaky_slope));
    double stddev = gain / std::sqrt(static_cast<double>(fan_in));
    fill_normal(w, rng, 0.0, stddev);
}

void init_linear_uniform(Tensor& w, Rng& rng) {
    int64_t fan_in = w.shape().back();
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    fill_uniform(w, rng, -bound, bound);
}

namespace {

Tensor make_param(std::vector<int64_t> shape, DType dt, double value = 0.0) {
    Tensor t = value == 0.0 ? Tensor::zeros(std::move(shape), dt) : Tensor::full(std::move(shape), dt, value);
    t.set_requires_grad(true);
    return t;
}

std::vector<int64_t> kernel_shape(int64_t cout, int64_t cin, int spatial_rank, int64_t k) {
    std::vector<int64_t> s{cout, cin};
    for (int a = 0; a < spatial_rank; ++a) s.push_back(k);
    return s;
}

}  // namespace

// ---- ResidualBlock ----------------------------------------------------------

ResidualBlock::ResidualBlock(const ResidualBlockCfg& cfg, DType dt, Rng& rng) : cfg_(cfg) {
    if (cfg_.spatial_rank < 1 || cfg_.spatial_rank > 3)
        throw PlanError(cat("residual block: spatial rank ", cfg_.spatial_rank));
    if (cfg_.stride.empty()) cfg_.stride.assign(static_cast<size_t>(cfg_.spatial_rank), 1);
    if (static_cast<int>(cfg_.stride.size()) != cfg_.spatial_rank)
        throw PlanError("residual block: stride rank mismatch");
    conv1_w_ = make_param(kernel_shape(cfg_.channels_out, cfg_.channels_in, cfg_.spatial_rank, 3), dt);
    init_conv_kaiming(conv1_w_, rng, cfg_.leaky_slope);
    conv1_b_ = make_param({cfg_.channels_out}, dt);
    in1_scale_ = make_param({cfg_.channels_out}, dt, 1.0);
    in1_shift_ = make_param({cfg_.channels_out}, dt);
    conv2_w_ = make_param(kernel_shape(cfg_.channels_out, cfg_.channels_out, cfg_.spatial_rank, 3), dt);
    init_conv_kaiming(conv2_w_, rng, cfg_.leaky_slope);
    conv2_b_ = make_param({cfg_.channels_out}, dt);
    in2_scale_ = make_param({cfg_.channels_out}, dt, 1.0);
    in2_shift_ = make_param({cfg_.channels_out}, dt);
    bool unit_stride = true;
    for (int64_t s : cfg_.stride) unit_stride &= (s == 1);
    projected_skip_ = !(unit_stride && cfg_.channels_in == cfg_.channels_out);
    if (projected_skip_) {
        skip_w_ = make_param(kernel_shape(cfg_.channels_out, cfg_.channels_in, cfg_.spatial_rank, 1), dt);
        init_conv_kaiming(skip_w_, rng, cfg_.leaky_slope);
        skip_b_ = make_param({cfg_.channels_out}, dt);
    }
}

Tensor ResidualBlock::forward(const Tensor& x) const {
    if (x.rank() != cfg_.spatial_rank + 2)
        throw DimensionError(cat("residual block: input rank ", x.rank(), " vs configured ", cfg_.spatial_rank + 2));
    if (x.shape()[1] != cfg_.channels_in)
        throw DimensionError(cat("residual block: channel axis 1: got ", x.shape()[1], ", expected ",
                                 cfg_.channels_in));
    std::vector<int64_t> pad(static_cast<size_t>(cfg_.spatial_rank), 1);
    std::vector<int64_t> ones(static_cast<size_t>(cfg_.spatial_rank), 1);
    Tensor h = conv(x, conv1_w_, conv1_b_, cfg_.stride, pad);
    h = leaky_relu(instance_norm(h, in1_scale_, in1_shift_, cfg_.norm_eps), cfg_.leaky_slope);
    h = conv(h, conv2_w_, conv2_b_, ones, pad);
    h = leaky_relu(instance_norm(h, in2_scale_, in2_shift_, cfg_.norm_eps), cfg_.leaky_slope);
    Tensor skip = x;
    if (projected_skip_) {
        std::vector<int64_t> zeros(static_cast<size_t>(cfg_.spatial_rank), 0);
        skip = conv(x, skip_w_, skip_b_, cfg_.stride, zeros);
    }
    return add(h, skip);
}

void ResidualBlock::collect_parameters(const std::string& prefix, ParamList& out) const {
    out.add(prefix + ".conv1.w", conv1_w_);
    out.add(prefix + ".conv1.b", conv1_b_);
    out.add(prefix + ".in1.scale", in1_scale_);
    out.add(prefix + ".in1.shift", in1_shift_);
    out.add(prefix + ".conv2.w", conv2_w_);
    out.add(prefix + ".conv2.b", conv2_b_);
    out.add(prefix + ".in2.scale", in2_scale_);
    out.add(prefix + ".in2.shift", in2_shift_);
    if (projected_skip_) {
        out.add(prefix + ".skip.w", skip_w_);
        out.add(prefix + ".skip.b", skip_b_);
    }
}

// ---- MambaBlock --------------------------------------------------------------

MambaBlock::MambaBlock(const MambaBlockCfg& cfg, DType dt, Rng& rng) : cfg_(cfg) {
    if (cfg_.model_channels < 1) throw PlanError("mamba block: model channels must be >= 1");
    int64_t C = cfg_.model_channels;
    int64_t EC = cfg_.expand * C;
    int64_t N = cfg_.state_size;
    w_in1_ = make_param({EC, C}, dt);
    init_linear_uniform(w_in1_, rng);
    b_in1_ = make_param({EC}, dt);
    w_in2_ = make_param({EC, C}, dt);
    init_linear_uniform(w_in2_, rng);
    b_in2_ = make_param({EC}, dt);
    conv_w_ = make_param({EC, cfg_.conv_width}, dt);
    init_linear_uniform(conv_w_, rng);
    conv_b_ = make_param({EC}, dt);
    A_ = s4d_real_init(EC, N, dt);
    A_.set_requires_grad(true);
    D_ = make_param({EC}, dt, 1.0);  // identity-like skip at init
    w_bproj_ = make_param({N, EC}, dt);
    init_linear_uniform(w_bproj_, rng);
    w_cproj_ = make_param({N, EC}, dt);
    init_linear_uniform(w_cproj_, rng);
    w_dproj_ = make_param({EC, EC}, dt);
    init_linear_uniform(w_dproj_, rng);
    // Bias chosen so softplus(bias) lands log-uniformly in the configured
    // initial step-size range.
    log_delta_bias_ = make_param({EC}, dt);
    for (int64_t c = 0; c < EC; ++c) {
        double lo = std::log(SsmDefaults::delta_init_min), hi = std::log(SsmDefaults::delta_init_max);
        double d0 = std::exp(rng.uniform(lo, hi));
        log_delta_bias_.set_flat(c, std::log(std::expm1(d0)));
    }
    w_out_ = make_param({C, EC}, dt);
    init_linear_uniform(w_out_, rng);
    b_out_ = make_param({C}, dt);
}

Tensor MambaBlock::forward(const Tensor& x) const {
    if (x.rank() != 3)
        throw DimensionError(cat("mamba block: input must be (B,L,C), got ", shape_str(x.shape())));
    if (x.shape()[1] < 1) throw ContractError("mamba block: empty sequence");
    if (x.shape()[2] != cfg_.model_channels)
        throw DimensionError(cat("mamba block: channel axis 2: got ", x.shape()[2], ", expected ",
                                 cfg_.model_channels));
    Tensor a = silu(causal_conv1d(linear(x, w_in1_, b_in1_), conv_w_, conv_b_));
    Tensor Bt = linear_nobias(a, w_bproj_);
    Tensor Ct = linear_nobias(a, w_cproj_);
    Tensor delta = softplus(linear(a, w_dproj_, log_delta_bias_));
    Tensor y = selective_scan(a, delta, A_, Bt, Ct, D_, cfg_.chunk_size);
    Tensor gate = silu(linear(x, w_in2_, b_in2_));
    return linear(hadamard(y, gate), w_out_, b_out_);
}

void MambaBlock::collect_parameters(const std::string& prefix, ParamList& out) const {
    out.add(prefix + ".in1.w", w_in1_);
    out.add(prefix + ".in1.b", b_in1_);
    out.add(prefix + ".in2.w", w_in2_);
    out.add(prefix + ".in2.b", b_in2_);
    out.add(prefix + ".conv.w", conv_w_);
    out.add(prefix + ".conv.b", conv_b_);
    out.add(prefix + ".A", A_);
    out.add(prefix + ".D", D_);
    out.add(prefix + ".bproj.w", w_bproj_);
    out.add(prefix + ".cproj.w", w_cproj_);
    out.add(prefix + ".dproj.w", w_dproj_);
    out.add(prefix + ".log_delta_bias", log_delta_bias_);
    out.add(prefix + ".out.w", w_out_);
    out.add(prefix + ".out.b", b_out_);
}

void MambaBlock::clamp_state_matrix() {
    // |exp(delta*a)| < 1 requires a < 0; training updates may cross zero.
    constexpr double kCeil = -1e-6;
    int64_t n = A_.numel();
    for (int64_t i = 0; i < n; ++i)
        if (A_.get_flat(i) > kCeil) A_.set_flat(i, kCeil);
}

// ---- UMambaBlock --------------------------------------------------------------

UMambaBlock::UMambaBlock(const UMambaBlockCfg& cfg, DType dt, Rng& rng)
    : cfg_(cfg),
      res1_(cfg.res, dt, rng),
      res2_([&] {
          ResidualBlockCfg second = cfg.res;
          second.channels_in = cfg.res.channels_out;
          second.stride.assign(static_cast<size_t>(cfg.res.spatial_rank), 1);
          return second;
      }(), dt, rng),
      mamba_([&] {
          MambaBlockCfg m = cfg.mamba;
          m.model_channels = cfg.res.channels_out;
          return m;
      }(), dt, rng) {
    ln_scale_ = make_param({cfg.res.channels_out}, dt, 1.0);
    ln_shift_ = make_param({cfg.res.channels_out}, dt);
}

Tensor UMambaBlock::forward(const Tensor& x) const {
    Tensor y = res2_.forward(res1_.forward(x));
    const auto& ys = y.shape();
    int64_t B = ys[0], C = ys[1];
    int64_t L = 1;
    for (size_t a = 2; a < ys.size(); ++a) L *= ys[a];
    // Row-major flatten over the spatial axes fixes the scan direction.
    Tensor flat = permute(reshape(y, {B, C, L}), {0, 2, 1});  // (B,L,C)
    Tensor m = mamba_.forward(layer_norm(flat, ln_scale_, ln_shift_, cfg_.ln_eps));
    Tensor z = reshape(permute(m, {0, 2, 1}), ys);
    return cfg_.residual_around_mamba ? add(z, y) : z;
}

void UMambaBlock::collect_parameters(const std::string& prefix, ParamList& out) const {
    res1_.collect_parameters(prefix + ".res1", out);
    res2_.collect_parameters(prefix + ".res2", out);
    out.add(prefix + ".ln.scale", ln_scale_);
    out.add(prefix + ".ln.shift", ln_shift_);
    mamba_.collect_parameters(prefix + ".mamba", out);
}

}  // namespace umamba
