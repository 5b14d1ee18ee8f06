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
#ifndef UMAMBA_NETWORK_HPP
#define UMAMBA_NETWORK_HPP

#include <memory>
#include <string>
#include <vector>

#include "umamba/blocks.hpp"

namespace umamba {

enum class Variant { Bot, Enc, CnnBaseline };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& s);

struct NetworkPlan {
    int dimensionality = 2;
    std::vector<int64_t> patch_size;
    int64_t batch_size = 2;
    int n_stages = 0;
    std::vector<int> poolings_per_axis;
    int64_t base_channels = 32;
    int64_t max_channels = 0;  // 0 -> 320 for 3-D, 512 for 2-D
    int64_t in_channels = 1;
    int64_t n_classes = 2;
    Variant variant = Variant::Enc;
    // SSM knobs (small desk-scale defaults, overridable)
    int64_t state_size = SsmDefaults::state_size;
    int64_t conv_width = SsmDefaults::conv_width;
    int64_t chunk_size = SsmDefaults::chunk_size;
    bool mamba_residual = true;
    std::vector<std::string> warnings;

    int64_t effective_max_channels() const {
        return max_channels ? max_channels : (dimensionality == 3 ? 320 : 512);
    }
    /// Throws PlanError when the invariants do not hold (stage arithmetic,
    /// per-axis divisibility by 2^pooling).
    void validate() const;
    int64_t stage_channels(int stage) const;
    /// Downsampling stride entering `stage` (stage >= 1): 2 on axes whose
    /// pooling budget covers this stage, else 1.
    std::vector<int64_t> stage_stride(int stage) const;
    /// Spatial extents of every stage for the configured patch size.
    std::vector<std::vector<int64_t>> stage_extents() const;
    std::vector<int64_t> bottleneck_extent() const { return stage_extents().back(); }

    std::string to_json() const;
    static NetworkPlan from_json(const std::string& text);
};

/// Encoder-decoder segmentation network. Encoder stages are U-Mamba blocks
/// (all of them for Enc, only the deepest for Bot, none for the CNN
/// baseline); the decoder is transposed convolutions and residual blocks with
/// channel-concatenated skips; the head is a 1x1 convolution plus softmax.
class Network {
public:
    Network(const NetworkPlan& plan, DType dt, uint64_t seed);

    /// x: (B, in_channels, patch...) -> class probabilities, same spatial shape.
    Tensor forward(const Tensor& x) const;

    const NetworkPlan& plan() const { return plan_; }
    DType dtype() const { return dtype_; }
    ParamList parameters() const;
    void zero_grads();
    /// Stability clamps to apply after every optimizer step.
    void post_step_clamp();

    /// Spatial extents seen at the deepest encoder stage during the last
    /// forward (runtime cross-check of the plan arithmetic).
    const std::vector<int64_t>& last_bottleneck_extent() const { return last_bottleneck_; }

    /// Sliding-window inference over a full image (in_channels, spatial...).
    /// Returns class probabilities (n_classes, spatial...). Windows are
    /// weighted with an axis-separable Gaussian (sigma = patch/8) unless
    /// gaussian=false (plain averaging).
    Tensor predict_probs_sliding(const Tensor& image, double overlap = 0.5, bool gaussian = true) const;
    /// Argmax of the above as a u8 label map (spatial...).
    Tensor predict_labels_sliding(const Tensor& image, double overlap = 0.5, bool gaussian = true) const;

private:
    struct EncoderStage {
        std::unique_ptr<UMambaBlock> umamba;
        std::unique_ptr<ResidualBlock> res_a, res_b;
        Tensor forward(const Tensor& x) const;
    };
    struct DecoderStage {
        Tensor up_w, up_b;
        std::vector<int64_t> up_stride;
        std::unique_ptr<ResidualBlock> res_a, res_b;
    };

    NetworkPlan plan_;
    DType dtype_;
    std::vector<EncoderStage> encoder_;
    std::vector<DecoderStage> decoder_;  // deepest-first
    Tensor head_w_, head_b_;
    mutable std::vector<int64_t> last_bottleneck_;
};

Tensor argmax_channel(const Tensor& probs);  // (K, spatial...) -> u8 (spatial...)

}  // namespace umamba

#endif
