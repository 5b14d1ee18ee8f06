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
#ifndef UMAMBA_BLOCKS_HPP
#define UMAMBA_BLOCKS_HPP

#include <string>
#include <vector>

#include "umamba/ops.hpp"
#include "umamba/ssm.hpp"

namespace umamba {

/// Ordered named parameters; insertion order is the checkpoint order.
struct ParamList {
    std::vector<std::pair<std::string, Tensor>> items;
    void add(const std::string& name, const Tensor& t) { items.emplace_back(name, t); }
};

struct ResidualBlockCfg {
    int spatial_rank = 2;
    int64_t channels_in = 0;
    int64_t channels_out = 0;
    std::vector<int64_t> stride;  // per spatial axis; defaults to all 1
    double norm_eps = 1e-5;
    double leaky_slope = 0.01;
};

/// conv3 -> IN -> LeakyReLU -> conv3 -> IN -> LeakyReLU, plus an identity
/// skip (1x1 strided projection when channels or stride differ).
class ResidualBlock {
public:
    ResidualBlock(const ResidualBlockCfg& cfg, DType dt, Rng& rng);

    Tensor forward(const Tensor& x) const;
    void collect_parameters(const std::string& prefix, ParamList& out) const;
    const ResidualBlockCfg& cfg() const { return cfg_; }

private:
    ResidualBlockCfg cfg_;
    Tensor conv1_w_, conv1_b_, in1_scale_, in1_shift_;
    Tensor conv2_w_, conv2_b_, in2_scale_, in2_shift_;
    bool projected_skip_ = false;
    Tensor skip_w_, skip_b_;
};

struct MambaBlockCfg {
    int64_t model_channels = 0;
    int64_t expand = 2;  // inner width = expand * model_channels
    int64_t state_size = SsmDefaults::state_size;
    int64_t conv_width = SsmDefaults::conv_width;
    int64_t chunk_size = SsmDefaults::chunk_size;
};

/// Gated dual-branch block on (B, L, C): branch one projects up, applies the
/// causal depthwise conv, SiLU and the selective scan; branch two is a SiLU
/// gate; the Hadamard-merged result is projected back to C. The caller is
/// expected to layer-normalize the input.
class MambaBlock {
public:
    MambaBlock(const MambaBlockCfg& cfg, DType dt, Rng& rng);

    Tensor forward(const Tensor& x) const;
    void collect_parameters(const std::string& prefix, ParamList& out) const;
    /// Keeps every entry of A strictly negative; called after optimizer steps.
    void clamp_state_matrix();
    const MambaBlockCfg& cfg() const { return cfg_; }

private:
    MambaBlockCfg cfg_;
    Tensor w_in1_, b_in1_, w_in2_, b_in2_;
    Tensor conv_w_, conv_b_;
    Tensor A_, D_, w_bproj_, w_cproj_, w_dproj_, log_delta_bias_;
    Tensor w_out_, b_out_;
};

struct UMambaBlockCfg {
    ResidualBlockCfg res;  // res.channels_* and stride apply to the first block
    MambaBlockCfg mamba;   // model_channels is forced to res.channels_out
    bool residual_around_mamba = true;
    double ln_eps = 1e-5;
};

/// Two residual blocks, then flatten (row-major over spatial axes) to
/// (B, L, C), layer norm, Mamba block, unflatten; optionally a residual
/// connection around the Mamba stage.
class UMambaBlock {
public:
    UMambaBlock(const UMambaBlockCfg& cfg, DType dt, Rng& rng);

    Tensor forward(const Tensor& x) const;
    void collect_parameters(const std::string& prefix, ParamList& out) const;
    void clamp_state_matrix() { mamba_.clamp_state_matrix(); }
    const UMambaBlockCfg& cfg() const { return cfg_; }

    // Sub-blocks are exposed so tests can run the convolutional path alone.
    const ResidualBlock& res1() const { return res1_; }
    const ResidualBlock& res2() const { return res2_; }
    MambaBlock& mamba() { return mamba_; }

private:
    UMambaBlockCfg cfg_;
    ResidualBlock res1_;
    ResidualBlock res2_;
    Tensor ln_scale_, ln_shift_;
    MambaBlock mamba_;
};

// Parameter initializers (seeded, deterministic order).
void init_conv_kaiming(Tensor& w, Rng& rng, double leaky_slope);
void init_linear_uniform(Tensor& w, Rng& rng);

}  // namespace umamba

#endif
