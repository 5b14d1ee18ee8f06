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

#include "oracles.hpp"
#include "umamba/gradcheck.hpp"
#include "umamba/ops.hpp"

using namespace umamba;

TEST_CASE("loss = sum(x) gives unit gradients") {
    Tensor x = Tensor::from({2, 2}, DType::F64, {1, 2, 3, 4});
    x.set_requires_grad(true);
    GradTape tape;
    Tensor loss = sum(x);
    tape.backward(loss);
    for (int64_t i = 0; i < 4; ++i) CHECK(x.grad_get_flat(i) == doctest::Approx(1.0));
}

TEST_CASE("loss = sum(x (.) x) gives 2x") {
    Tensor x = Tensor::from({3}, DType::F64, {1.5, -2.0, 0.25});
    x.set_requires_grad(true);
    GradTape tape;
    Tensor loss = sum(hadamard(x, x));
    tape.backward(loss);
    for (int64_t i = 0; i < 3; ++i) CHECK(x.grad_get_flat(i) == doctest::Approx(2.0 * x.get_flat(i)));
}

TEST_CASE("gradients accumulate across uses of a shared tensor") {
    Tensor x = Tensor::from({2}, DType::F64, {1.0, 2.0});
    x.set_requires_grad(true);
    GradTape tape;
    Tensor loss = sum(add(x, x));  // both addends share storage
    tape.backward(loss);
    CHECK(x.grad_get_flat(0) == doctest::Approx(2.0));
    CHECK(x.grad_get_flat(1) == doctest::Approx(2.0));
}

TEST_CASE("backward rejects non-scalar losses") {
    Tensor x = Tensor::zeros({2, 2}, DType::F64);
    x.set_requires_grad(true);
    GradTape tape;
    Tensor y = scale(x, 2.0);
    CHECK_THROWS_AS(tape.backward(y), ContractError);
}

TEST_CASE("no tape, no recording") {
    Tensor x = Tensor::zeros({2}, DType::F64);
    x.set_requires_grad(true);
    Tensor y = scale(x, 2.0);
    CHECK_FALSE(y.requires_grad());
}

TEST_CASE("conv identity kernel reproduces the input") {
    Rng rng(1);
    Tensor x = Tensor::zeros({1, 1, 5, 5}, DType::F64);
    fill_normal(x, rng, 0.0, 1.0);
    Tensor w = Tensor::full({1, 1, 1, 1}, DType::F64, 1.0);
    Tensor b = Tensor::zeros({1}, DType::F64);
    Tensor y = conv(x, w, b, {1, 1}, {0, 0});
    CHECK(y.value_bytes() == x.value_bytes());
}

TEST_CASE("conv of zeros is zero") {
    Tensor x = Tensor::zeros({1, 2, 4, 4}, DType::F64);
    Rng rng(2);
    Tensor w = Tensor::zeros({3, 2, 3, 3}, DType::F64);
    fill_normal(w, rng, 0.0, 1.0);
    Tensor b = Tensor::zeros({3}, DType::F64);
    Tensor y = conv(x, w, b, {1, 1}, {1, 1});
    for (int64_t i = 0; i < y.numel(); ++i) CHECK(y.get_flat(i) == 0.0);
}

TEST_CASE("conv matches the six-nested-loop oracle") {
    Rng rng(7);
    Tensor x = Tensor::zeros({1, 2, 4, 4}, DType::F64);
    fill_normal(x, rng, 0.0, 1.0);
    Tensor w = Tensor::zeros({3, 2, 3, 3}, DType::F64);
    fill_normal(w, rng, 0.0, 1.0);
    Tensor b = Tensor::zeros({3}, DType::F64);
    fill_normal(b, rng, 0.0, 1.0);
    Tensor got = conv(x, w, b, {1, 1}, {1, 1});
    Tensor want = oracle::conv2d_loops(x, w, b, 1, 1);
    REQUIRE(got.shape() == want.shape());
    for (int64_t i = 0; i < got.numel(); ++i)
        CHECK(std::abs(got.get_flat(i) - want.get_flat(i)) <= 1e-12);
}

TEST_CASE("conv shape errors name the axis") {
    Tensor x = Tensor::zeros({1, 2, 4, 4}, DType::F64);
    Tensor w = Tensor::zeros({3, 5, 3, 3}, DType::F64);  // wrong in-channels
    Tensor b = Tensor::zeros({3}, DType::F64);
    try {
        conv(x, w, b, {1, 1}, {1, 1});
        FAIL("expected a dimension error");
    } catch (const DimensionError& e) {
        CHECK(std::string(e.what()).find("axis 1") != std::string::npos);
    }
    Tensor wbig = Tensor::zeros({3, 2, 9, 3}, DType::F64);
    CHECK_THROWS_AS(conv(x, wbig, b, {1, 1}, {1, 1}), DimensionError);
}

TEST_CASE("conv_transpose scatter fixture: 2x2 ones, stride 2 -> 4x4 ones") {
    Tensor x = Tensor::full({1, 1, 2, 2}, DType::F64, 1.0);
    Tensor w = Tensor::full({1, 1, 2, 2}, DType::F64, 1.0);
    Tensor b = Tensor::zeros({1}, DType::F64);
    Tensor y = conv_transpose(x, w, b, {2, 2});
    REQUIRE(y.shape() == std::vector<int64_t>{1, 1, 4, 4});
    for (int64_t i = 0; i < 16; ++i) CHECK(y.get_flat(i) == doctest::Approx(1.0));
}

TEST_CASE("conv_transpose of zeros is zero") {
    Tensor x = Tensor::zeros({1, 2, 3, 3}, DType::F64);
    Rng rng(3);
    Tensor w = Tensor::zeros({2, 1, 2, 2}, DType::F64);
    fill_normal(w, rng, 0.0, 1.0);
    Tensor b = Tensor::zeros({1}, DType::F64);
    Tensor y = conv_transpose(x, w, b, {2, 2});
    for (int64_t i = 0; i < y.numel(); ++i) CHECK(y.get_flat(i) == 0.0);
}

TEST_CASE("conv and conv_transpose are adjoint") {
    // <conv(x,w), y> == <x, conv_transpose(y,w)> with zero biases; extents
    // are stride-aligned so the adjoint returns the full input grid.
    Rng rng(13);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor x = Tensor::zeros({2, 3, 6, 4}, DType::F64);
        fill_normal(x, rng, 0.0, 1.0);
        Tensor w = Tensor::zeros({4, 3, 2, 2}, DType::F64);
        fill_normal(w, rng, 0.0, 1.0);
        Tensor b0co = Tensor::zeros({4}, DType::F64);
        Tensor b0ci = Tensor::zeros({3}, DType::F64);
        Tensor cx = conv(x, w, b0co, {2, 2}, {0, 0});
        Tensor y = Tensor::zeros(cx.shape(), DType::F64);
        fill_normal(y, rng, 0.0, 1.0);
        Tensor ty = conv_transpose(y, w, b0ci, {2, 2});
        REQUIRE(ty.shape() == x.shape());
        double lhs = 0.0, rhs = 0.0;
        for (int64_t i = 0; i < cx.numel(); ++i) lhs += cx.get_flat(i) * y.get_flat(i);
        for (int64_t i = 0; i < x.numel(); ++i) rhs += x.get_flat(i) * ty.get_flat(i);
        CHECK(std::abs(lhs - rhs) <= 1e-10);
    }
}

TEST_CASE("softmax rows sum to one") {
    Rng rng(17);
    Tensor x = Tensor::zeros({2, 5, 3, 3}, DType::F64);
    fill_normal(x, rng, 0.0, 3.0);
    Tensor y = softmax(x, 1);
    for (int64_t b = 0; b < 2; ++b)
        for (int64_t i = 0; i < 9; ++i) {
            double s = 0.0;
            for (int64_t c = 0; c < 5; ++c) s += y.get_flat((b * 5 + c) * 9 + i);
            CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
        }
}

TEST_CASE("closed-form activation values") {
    Tensor x = Tensor::from({2}, DType::F64, {0.0, -1.0});
    Tensor s = silu(x);
    CHECK(s.get_flat(0) == doctest::Approx(0.0));
    Tensor l = leaky_relu(x, 0.01);
    CHECK(l.get_flat(0) == doctest::Approx(0.0));
    CHECK(l.get_flat(1) == doctest::Approx(-0.01));
}

TEST_CASE("instance norm standardizes each (sample, channel) slice") {
    Rng rng(23);
    Tensor x = Tensor::zeros({2, 3, 7, 5}, DType::F64);
    fill_normal(x, rng, 2.0, 3.0);
    Tensor g = Tensor::full({3}, DType::F64, 1.0);
    Tensor s = Tensor::zeros({3}, DType::F64);
    Tensor y = instance_norm(x, g, s, 1e-5);
    for (int64_t b = 0; b < 2; ++b)
        for (int64_t c = 0; c < 3; ++c) {
            double mean = 0.0, var = 0.0;
            for (int64_t i = 0; i < 35; ++i) mean += y.get_flat((b * 3 + c) * 35 + i);
            mean /= 35;
            for (int64_t i = 0; i < 35; ++i) {
                double v = y.get_flat((b * 3 + c) * 35 + i) - mean;
                var += v * v;
            }
            var /= 35;
            CHECK(std::abs(mean) <= 1e-6);
            CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
        }
}

TEST_CASE("per-primitive finite-difference suite") {
    for (const auto& e : run_gradient_suite()) {
        INFO(e.name, " max_rel_err=", e.max_rel_err);
        CHECK(e.ok);
    }
}
