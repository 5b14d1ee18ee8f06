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
#include "umamba/tensor.hpp"

#include <cstring>

namespace umamba {

int64_t shape_numel(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t e : shape) {
        if (e <= 0) throw DimensionError(cat("tensor: nonpositive extent in shape ", shape_str(shape)));
        n *= e;
    }
    return n;
}

std::vector<int64_t> row_major_strides(const std::vector<int64_t>& shape) {
    std::vector<int64_t> s(shape.size(), 1);
    for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) s[i] = s[i + 1] * shape[i + 1];
    return s;
}

namespace {
Storage make_storage(DType dt, int64_t n) {
    switch (dt) {
        case DType::F32: return std::vector<float>(static_cast<size_t>(n), 0.f);
        case DType::F64: return std::vector<double>(static_cast<size_t>(n), 0.0);
        case DType::U8: return std::vector<uint8_t>(static_cast<size_t>(n), 0);
    }
    throw ContractError("tensor: unknown dtype");
}
}  // namespace

Tensor Tensor::zeros(std::vector<int64_t> shape, DType dt) {
    Tensor t;
    t.impl_ = std::make_shared<TensorImpl>();
    int64_t n = shape_numel(shape);
    t.impl_->shape = std::move(shape);
    t.impl_->dtype = dt;
    t.impl_->data = make_storage(dt, n);
    return t;
}

Tensor Tensor::full(std::vector<int64_t> shape, DType dt, double value) {
    Tensor t = zeros(std::move(shape), dt);
    int64_t n = t.numel();
    for (int64_t i = 0; i < n; ++i) t.set_flat(i, value);
    return t;
}

Tensor Tensor::from(std::vector<int64_t> shape, DType dt, const std::vector<double>& values) {
    Tensor t = zeros(std::move(shape), dt);
    if (static_cast<int64_t>(values.size()) != t.numel())
        throw DimensionError(cat("tensor: ", values.size(), " values for shape ", shape_str(t.shape())));
    for (size_t i = 0; i < values.size(); ++i) t.set_flat(static_cast<int64_t>(i), values[i]);
    return t;
}

Tensor Tensor::from_labels(std::vector<int64_t> shape, const std::vector<uint8_t>& values) {
    Tensor t = zeros(std::move(shape), DType::U8);
    if (static_cast<int64_t>(values.size()) != t.numel())
        throw DimensionError(cat("tensor: ", values.size(), " labels for shape ", shape_str(t.shape())));
    auto d = t.data<uint8_t>();
    std::memcpy(d.data(), values.data(), values.size());
    return t;
}

void Tensor::set_requires_grad(bool v) {
    if (v && !is_float_dtype(impl_->dtype))
        throw ContractError("tensor: label tensors never participate in differentiation");
    impl_->requires_grad = v;
}

void Tensor::ensure_grad() {
    if (!is_float_dtype(impl_->dtype))
        throw ContractError("tensor: label tensors never participate in differentiation");
    if (!impl_->grad_present) {
        impl_->grad = make_storage(impl_->dtype, numel());
        impl_->grad_present = true;
    }
}

void Tensor::zero_grad() {
    if (!impl_->grad_present) return;
    if (impl_->dtype == DType::F32) {
        auto& g = std::get<std::vector<float>>(impl_->grad);
        std::fill(g.begin(), g.end(), 0.f);
    } else {
        auto& g = std::get<std::vector<double>>(impl_->grad);
        std::fill(g.begin(), g.end(), 0.0);
    }
}

void Tensor::drop_grad() {
    impl_->grad_present = false;
    impl_->grad = Storage{};
}

double Tensor::item() const {
    if (numel() != 1) throw ContractError(cat("tensor: item() on shape ", shape_str(shape())));
    return get_flat(0);
}

double Tensor::get_flat(int64_t i) const {
    switch (impl_->dtype) {
        case DType::F32: return std::get<std::vector<float>>(impl_->data)[static_cast<size_t>(i)];
        case DType::F64: return std::get<std::vector<double>>(impl_->data)[static_cast<size_t>(i)];
        case DType::U8: return std::get<std::vector<uint8_t>>(impl_->data)[static_cast<size_t>(i)];
    }
    throw ContractError("tensor: unknown dtype");
}

void Tensor::set_flat(int64_t i, double value) {
    switch (impl_->dtype) {
        case DType::F32:
            std::get<std::vector<float>>(impl_->data)[static_cast<size_t>(i)] = static_cast<float>(value);
            return;
        case DType::F64:
            std::get<std::vector<double>>(impl_->data)[static_cast<size_t>(i)] = value;
            return;
        case DType::U8:
            std::get<std::vector<uint8_t>>(impl_->data)[static_cast<size_t>(i)] = static_cast<uint8_t>(value);
            return;
    }
    throw ContractError("tensor: unknown dtype");
}

double Tensor::grad_get_flat(int64_t i) const {
    if (!impl_->grad_present) throw ContractError("tensor: grad not allocated");
    if (impl_->dtype == DType::F32)
        return std::get<std::vector<float>>(impl_->grad)[static_cast<size_t>(i)];
    return std::get<std::vector<double>>(impl_->grad)[static_cast<size_t>(i)];
}

double Tensor::get(const std::vector<int64_t>& index) const { return get_flat(ravel_index(index, shape())); }
void Tensor::set(const std::vector<int64_t>& index, double value) { set_flat(ravel_index(index, shape()), value); }
double Tensor::grad_get(const std::vector<int64_t>& index) const { return grad_get_flat(ravel_index(index, shape())); }

Tensor Tensor::clone() const {
    Tensor t = zeros(shape(), dtype());
    t.impl_->data = impl_->data;
    t.impl_->requires_grad = impl_->requires_grad;
    return t;
}

Tensor Tensor::astype(DType dt) const {
    Tensor t = zeros(shape(), dt);
    int64_t n = numel();
    for (int64_t i = 0; i < n; ++i) t.set_flat(i, get_flat(i));
    return t;
}

std::vector<uint8_t> Tensor::value_bytes() const {
    const void* p = nullptr;
    size_t bytes = 0;
    switch (impl_->dtype) {
        case DType::F32: {
            const auto& v = std::get<std::vector<float>>(impl_->data);
            p = v.data();
            bytes = v.size() * sizeof(float);
            break;
        }
        case DType::F64: {
            const auto& v = std::get<std::vector<double>>(impl_->data);
            p = v.data();
            bytes = v.size() * sizeof(double);
            break;
        }
        case DType::U8: {
            const auto& v = std::get<std::vector<uint8_t>>(impl_->data);
            p = v.data();
            bytes = v.size();
            break;
        }
    }
    std::vector<uint8_t> out(bytes);
    std::memcpy(out.data(), p, bytes);
    return out;
}

int64_t ravel_index(const std::vector<int64_t>& index, const std::vector<int64_t>& shape) {
    if (index.size() != shape.size())
        throw DimensionError(cat("tensor: index rank ", index.size(), " vs shape ", shape_str(shape)));
    int64_t flat = 0;
    for (size_t a = 0; a < shape.size(); ++a) {
        if (index[a] < 0 || index[a] >= shape[a])
            throw DimensionError(cat("tensor: index out of range on axis ", a));
        flat = flat * shape[a] + index[a];
    }
    return flat;
}

std::vector<int64_t> unravel_index(int64_t flat, const std::vector<int64_t>& shape) {
    std::vector<int64_t> idx(shape.size(), 0);
    for (int a = static_cast<int>(shape.size()) - 1; a >= 0; --a) {
        idx[a] = flat % shape[a];
        flat /= shape[a];
    }
    return idx;
}

void fill_normal(Tensor& t, Rng& rng, double mean, double stddev) {
    int64_t n = t.numel();
    for (int64_t i = 0; i < n; ++i) t.set_flat(i, rng.normal(mean, stddev));
}

void fill_uniform(Tensor& t, Rng& rng, double lo, double hi) {
    int64_t n = t.numel();
    for (int64_t i = 0; i < n; ++i) t.set_flat(i, rng.uniform(lo, hi));
}

}  // namespace umamba
