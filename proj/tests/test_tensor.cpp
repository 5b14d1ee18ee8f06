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

#include <cstdio>
#include <filesystem>

#include "umamba/ops.hpp"
#include "umamba/tensor_io.hpp"

using namespace umamba;

TEST_CASE("shape bookkeeping") {
    Tensor t = Tensor::zeros({2, 3, 4}, DType::F32);
    CHECK(t.numel() == 24);
    CHECK(t.rank() == 3);
    t.set({1, 2, 3}, 5.0);
    CHECK(t.get({1, 2, 3}) == doctest::Approx(5.0));
    CHECK(t.get_flat(23) == doctest::Approx(5.0));
    CHECK_THROWS_AS(Tensor::zeros({2, 0}, DType::F32), DimensionError);
    CHECK_THROWS_AS(t.get({2, 0, 0}), DimensionError);
}

TEST_CASE("label tensors never participate in differentiation") {
    Tensor lab = Tensor::zeros({4}, DType::U8);
    CHECK_THROWS_AS(lab.set_requires_grad(true), ContractError);
    CHECK_THROWS_AS(lab.ensure_grad(), ContractError);
}

TEST_CASE("grad buffer matches shape and accumulates") {
    Tensor t = Tensor::zeros({3, 2}, DType::F64);
    t.set_requires_grad(true);
    t.ensure_grad();
    CHECK(t.grad<double>().size() == 6);
    t.zero_grad();
    CHECK(t.grad_get_flat(0) == 0.0);
}

TEST_CASE("reshape and permute round-trip bit for bit") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor x = Tensor::zeros({2, 3, 5}, DType::F32);
        fill_normal(x, rng, 0.0, 1.0);
        Tensor r = reshape(reshape(x, {5, 6}), {2, 3, 5});
        CHECK(r.value_bytes() == x.value_bytes());
        Tensor p = permute(permute(x, {2, 0, 1}), {1, 2, 0});
        CHECK(p.value_bytes() == x.value_bytes());
    }
}

TEST_CASE("permute moves values where expected") {
    Tensor x = Tensor::from({2, 3}, DType::F64, {1, 2, 3, 4, 5, 6});
    Tensor p = permute(x, {1, 0});
    CHECK(p.shape() == std::vector<int64_t>{3, 2});
    CHECK(p.get({0, 1}) == doctest::Approx(4));
    CHECK(p.get({2, 0}) == doctest::Approx(3));
}

TEST_CASE("forward results are deterministic across identical runs") {
    auto run = [] {
        Rng rng(11);
        Tensor x = Tensor::zeros({1, 2, 6, 6}, DType::F32);
        fill_normal(x, rng, 0.0, 1.0);
        Tensor w = Tensor::zeros({3, 2, 3, 3}, DType::F32);
        fill_normal(w, rng, 0.0, 0.5);
        Tensor b = Tensor::zeros({3}, DType::F32);
        Tensor y = conv(x, w, b, {1, 1}, {1, 1});
        Tensor g = Tensor::full({3}, DType::F32, 1.0);
        Tensor s = Tensor::zeros({3}, DType::F32);
        return softmax(instance_norm(y, g, s, 1e-5), 1).value_bytes();
    };
    CHECK(run() == run());
}

TEST_CASE("UMTN round-trips every dtype") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "umtn_test";
    fs::create_directories(dir);
    Rng rng(5);
    Tensor f32 = Tensor::zeros({3, 4}, DType::F32);
    fill_normal(f32, rng, 0.0, 1.0);
    Tensor f64 = Tensor::zeros({2, 2, 2}, DType::F64);
    fill_normal(f64, rng, 0.0, 1.0);
    Tensor u8 = Tensor::from_labels({5}, {0, 1, 2, 3, 255});
    for (const Tensor& t : {f32, f64, u8}) {
        auto path = (dir / "t.umtn").string();
        write_tensor(path, t);
        Tensor back = read_tensor(path);
        CHECK(back.dtype() == t.dtype());
        CHECK(back.shape() == t.shape());
        CHECK(back.value_bytes() == t.value_bytes());
    }
    SUBCASE("header layout is exactly as specified") {
        auto bytes = tensor_to_umtn(u8);
        REQUIRE(bytes.size() >= 16);
        CHECK(bytes[0] == 'U');
        CHECK(bytes[1] == 'M');
        CHECK(bytes[2] == 'T');
        CHECK(bytes[3] == 'N');
        CHECK(bytes[4] == 1);  // version u16 LE
        CHECK(bytes[5] == 0);
        CHECK(bytes[6] == 2);  // dtype code u8
        CHECK(bytes[7] == 1);  // rank
        CHECK(bytes[8] == 5);  // extent u64 LE
        CHECK(bytes[16] == 0); // first payload byte
    }
    SUBCASE("corrupt files are rejected") {
        auto bytes = tensor_to_umtn(f32);
        bytes[0] = 'X';
        CHECK_THROWS_AS(tensor_from_umtn(bytes), IoError);
        bytes = tensor_to_umtn(f32);
        bytes.pop_back();
        CHECK_THROWS_AS(tensor_from_umtn(bytes), IoError);
    }
}

TEST_CASE("dimension errors name the offending axis") {
    Tensor a = Tensor::zeros({2, 3}, DType::F32);
    Tensor b = Tensor::zeros({2, 4}, DType::F32);
    try {
        add(a, b);
        FAIL("expected a dimension error");
    } catch (const DimensionError& e) {
        CHECK(std::string(e.what()).find("axis 1") != std::string::npos);
    }
}
