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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "umamba/checkpoint.hpp"
#include "umamba/tensor_io.hpp"

using namespace umamba;

namespace {

NetworkPlan small_plan(Variant v, int64_t base = 4) {
    NetworkPlan p;
    p.dimensionality = 2;
    p.patch_size = {16, 16};
    p.batch_size = 2;
    p.n_stages = 3;
    p.poolings_per_axis = {2, 2};
    p.base_channels = base;
    p.n_classes = 3;
    p.state_size = 4;
    p.variant = v;
    return p;
}

int64_t param_count(const Network& net) {
    int64_t n = 0;
    for (const auto& [name, t] : net.parameters().items) n += t.numel();
    return n;
}

}  // namespace

TEST_CASE("plan invariants are enforced") {
    NetworkPlan p = small_plan(Variant::Enc);
    CHECK_NOTHROW(p.validate());
    SUBCASE("stage arithmetic") {
        p.n_stages = 2;
        CHECK_THROWS_AS(p.validate(), PlanError);
    }
    SUBCASE("divisibility") {
        p.patch_size = {18, 16};
        CHECK_THROWS_AS(p.validate(), PlanError);
    }
    SUBCASE("channel schedule honors the cap") {
        NetworkPlan q = small_plan(Variant::Enc, 32);
        q.max_channels = 64;
        CHECK(q.stage_channels(0) == 32);
        CHECK(q.stage_channels(1) == 64);
        CHECK(q.stage_channels(2) == 64);
    }
}

TEST_CASE("plan json round-trip") {
    NetworkPlan p = small_plan(Variant::Bot);
    p.variant = Variant::Bot;
    std::string text = p.to_json();
    NetworkPlan q = NetworkPlan::from_json(text);
    CHECK(q.patch_size == p.patch_size);
    CHECK(q.poolings_per_axis == p.poolings_per_axis);
    CHECK(q.n_stages == p.n_stages);
    CHECK(q.variant == Variant::Bot);
    CHECK(q.to_json() == text);
    CHECK_THROWS_AS(NetworkPlan::from_json("{not json"), IoError);
}

TEST_CASE("encoder extents follow the plan stage by stage") {
    NetworkPlan p;
    p.dimensionality = 3;
    p.patch_size = {48, 160, 224};
    p.n_stages = 6;
    p.poolings_per_axis = {3, 5, 5};
    p.base_channels = 4;
    p.n_classes = 2;
    auto extents = p.stage_extents();
    REQUIRE(extents.size() == 6);
    CHECK(extents[0] == std::vector<int64_t>{48, 160, 224});
    CHECK(extents[1] == std::vector<int64_t>{24, 80, 112});
    CHECK(extents[3] == std::vector<int64_t>{6, 20, 28});
    // axis 0 stops halving after its 3 poolings
    CHECK(extents[4] == std::vector<int64_t>{6, 10, 14});
    CHECK(extents[5] == std::vector<int64_t>{6, 5, 7});
    CHECK(p.bottleneck_extent() == std::vector<int64_t>{6, 5, 7});
}

TEST_CASE("variant parameter-count ordering: cnn < bot < enc") {
    Network cnn(small_plan(Variant::CnnBaseline), DType::F32, 1);
    Network bot(small_plan(Variant::Bot), DType::F32, 1);
    Network enc(small_plan(Variant::Enc), DType::F32, 1);
    CHECK(param_count(cnn) < param_count(bot));
    CHECK(param_count(bot) < param_count(enc));
}

TEST_CASE("forward on zeros: softmax sums to one everywhere") {
    Network net(small_plan(Variant::Bot), DType::F32, 3);
    Tensor x = Tensor::zeros({2, 1, 16, 16}, DType::F32);
    Tensor probs = net.forward(x);
    REQUIRE(probs.shape() == std::vector<int64_t>{2, 3, 16, 16});
    for (int64_t b = 0; b < 2; ++b)
        for (int64_t i = 0; i < 256; ++i) {
            double s = 0.0;
            for (int64_t k = 0; k < 3; ++k) s += probs.get_flat((b * 3 + k) * 256 + i);
            CHECK(std::abs(s - 1.0) <= 1e-5);
        }
    CHECK(net.last_bottleneck_extent() == std::vector<int64_t>{4, 4});
}

TEST_CASE("forward rejects wrong patch shapes") {
    Network net(small_plan(Variant::CnnBaseline), DType::F32, 3);
    CHECK_THROWS_AS(net.forward(Tensor::zeros({1, 1, 16, 8}, DType::F32)), DimensionError);
    CHECK_THROWS_AS(net.forward(Tensor::zeros({1, 2, 16, 16}, DType::F32)), DimensionError);
}

TEST_CASE("forward determinism: identical runs give identical bytes") {
    Network net(small_plan(Variant::Enc), DType::F32, 9);
    Rng rng(4);
    Tensor x = Tensor::zeros({1, 1, 16, 16}, DType::F32);
    fill_normal(x, rng, 0.0, 1.0);
    CHECK(net.forward(x).value_bytes() == net.forward(x).value_bytes());
}

TEST_CASE("checkpoint round-trip reproduces the forward pass bit for bit") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "umamba_ck_test";
    fs::create_directories(dir);
    auto path = (dir / "ck.umck").string();

    Network net(small_plan(Variant::Bot), DType::F32, 5);
    Rng rng(6);
    Tensor probe = Tensor::zeros({1, 1, 16, 16}, DType::F32);
    fill_normal(probe, rng, 0.0, 1.0);
    auto before = net.forward(probe).value_bytes();

    Checkpoint ck = Checkpoint::capture(net, 17, Rng(3).serialize());
    ck.save(path);
    Checkpoint back = Checkpoint::load(path);
    CHECK(back.epoch == 17);
    Network restored = back.instantiate(99);  // different seed: weights must come from the file
    CHECK(restored.forward(probe).value_bytes() == before);

    SUBCASE("corruption is detected") {
        auto bytes = read_file_bytes(path);
        bytes[bytes.size() / 2] ^= 0x40;
        write_file_bytes(path, bytes);
        CHECK_THROWS_AS(Checkpoint::load(path), IoError);
    }
}

TEST_CASE("sliding window over a single-patch image equals plain forward argmax") {
    NetworkPlan p = small_plan(Variant::Bot);
    Network net(p, DType::F32, 7);
    Rng rng(8);
    Tensor image = Tensor::zeros({1, 16, 16}, DType::F32);
    fill_normal(image, rng, 0.0, 1.0);
    Tensor labels = net.predict_labels_sliding(image, 0.5, true);
    Tensor batched = Tensor::zeros({1, 1, 16, 16}, DType::F32);
    std::copy(image.data<float>().begin(), image.data<float>().end(), batched.data<float>().begin());
    Tensor probs = net.forward(batched);
    Tensor direct = argmax_channel(reshape(probs, {3, 16, 16}));
    CHECK(labels.value_bytes() == direct.value_bytes());
}

TEST_CASE("sliding window: aggregated probabilities still sum to one on seams") {
    NetworkPlan p = small_plan(Variant::CnnBaseline);
    Network net(p, DType::F32, 11);
    Rng rng(10);
    Tensor image = Tensor::zeros({1, 24, 30}, DType::F32);  // forces overlapping windows
    fill_normal(image, rng, 0.0, 1.0);
    Tensor probs = net.predict_probs_sliding(image, 0.5, true);
    REQUIRE(probs.shape() == std::vector<int64_t>{3, 24, 30});
    for (int64_t i = 0; i < 24 * 30; ++i) {
        double s = 0.0;
        for (int64_t k = 0; k < 3; ++k) s += probs.get_flat(k * 24 * 30 + i);
        CHECK(std::abs(s - 1.0) <= 1e-5);
    }
}

TEST_CASE("sliding window pads small images reflectively and crops back") {
    NetworkPlan p = small_plan(Variant::CnnBaseline);
    Network net(p, DType::F32, 12);
    Rng rng(11);
    Tensor image = Tensor::zeros({1, 10, 12}, DType::F32);  // smaller than the 16x16 patch
    fill_normal(image, rng, 0.0, 1.0);
    Tensor labels = net.predict_labels_sliding(image);
    CHECK(labels.shape() == std::vector<int64_t>{10, 12});
}

TEST_CASE("constant image: interior prediction repeats with the window stride") {
    // Every window sees the same constant input, so for voxels covered by
    // the full set of window phases the aggregation at v and v + step is the
    // same term sequence; predictions in the interior are periodic with the
    // stride (translation of a constant input maps the window grid onto
    // itself). 48 = patch + 2*step keeps the window grid regular.
    NetworkPlan p = small_plan(Variant::CnnBaseline);
    Network net(p, DType::F32, 13);
    Tensor image = Tensor::full({1, 48, 48}, DType::F32, 0.7);
    Tensor probs = net.predict_probs_sliding(image, 0.5, true);
    const int64_t step = 8;  // patch 16, overlap 0.5
    for (int64_t y = 15; y <= 24; ++y)
        for (int64_t x = 15; x <= 24; ++x)
            for (int64_t k = 0; k < 3; ++k) {
                double v = probs.get_flat((k * 48 + y) * 48 + x);
                CHECK(v == probs.get_flat((k * 48 + y + step) * 48 + x));
                CHECK(v == probs.get_flat((k * 48 + y) * 48 + x + step));
            }
}

TEST_CASE("3-d network builds and runs a forward pass") {
    NetworkPlan p;
    p.dimensionality = 3;
    p.patch_size = {8, 16, 16};
    p.n_stages = 3;
    p.poolings_per_axis = {1, 2, 2};
    p.base_channels = 2;
    p.n_classes = 2;
    p.state_size = 4;
    p.variant = Variant::Bot;
    Network net(p, DType::F32, 15);
    Tensor x = Tensor::zeros({1, 1, 8, 16, 16}, DType::F32);
    Rng rng(14);
    fill_normal(x, rng, 0.0, 1.0);
    Tensor probs = net.forward(x);
    CHECK(probs.shape() == std::vector<int64_t>{1, 2, 8, 16, 16});
    CHECK(net.last_bottleneck_extent() == std::vector<int64_t>{4, 4, 4});
}
