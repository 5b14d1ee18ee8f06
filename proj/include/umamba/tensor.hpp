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
#ifndef UMAMBA_TENSOR_HPP
#define UMAMBA_TENSOR_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "umamba/common.hpp"

namespace umamba {

enum class DType : uint8_t {
    F32 = 0,
    F64 = 1,
    U8 = 2,  // label maps; never differentiable
};

inline const char* dtype_name(DType d) {
    switch (d) {
        case DType::F32: return "f32";
        case DType::F64: return "f64";
        case DType::U8: return "u8";
    }
    return "?";
}

inline bool is_float_dtype(DType d) { return d == DType::F32 || d == DType::F64; }

using Storage = std::variant<std::vector<float>, std::vector<double>, std::vector<uint8_t>>;

int64_t shape_numel(const std::vector<int64_t>& shape);
std::vector<int64_t> row_major_strides(const std::vector<int64_t>& shape);

struct TensorImpl {
    std::vector<int64_t> shape;
    DType dtype = DType::F32;
    Storage data;
    bool requires_grad = false;
    bool grad_present = false;
    Storage grad;  // engaged (same alternative as data) iff grad_present
};

/// Dense row-major n-d array with optional gradient buffer. Value-semantic
/// handle over shared storage: copies alias the same buffer.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int64_t> shape, DType dt);
    static Tensor full(std::vector<int64_t> shape, DType dt, double value);
    static Tensor scalar(DType dt, double value) { return full({1}, dt, value); }
    /// Copies `values` (converting) into a fresh tensor.
    static Tensor from(std::vector<int64_t> shape, DType dt, const std::vector<double>& values);
    static Tensor from_labels(std::vector<int64_t> shape, const std::vector<uint8_t>& values);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<int64_t>& shape() const { return impl_->shape; }
    int rank() const { return static_cast<int>(impl_->shape.size()); }
    int64_t numel() const { return shape_numel(impl_->shape); }
    DType dtype() const { return impl_->dtype; }

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool v);

    bool has_grad() const { return impl_->grad_present; }
    void ensure_grad();
    void zero_grad();
    void drop_grad();

    template <typename T>
    std::span<T> data() {
        check_dtype<T>();
        return std::span<T>(std::get<std::vector<T>>(impl_->data));
    }
    template <typename T>
    std::span<const T> data() const {
        check_dtype<T>();
        return std::span<const T>(std::get<std::vector<T>>(impl_->data));
    }
    template <typename T>
    std::span<T> grad() {
        check_dtype<T>();
        if (!impl_->grad_present) throw ContractError("tensor: grad not allocated");
        return std::span<T>(std::get<std::vector<T>>(impl_->grad));
    }
    template <typename T>
    std::span<const T> grad() const {
        check_dtype<T>();
        if (!impl_->grad_present) throw ContractError("tensor: grad not allocated");
        return std::span<const T>(std::get<std::vector<T>>(impl_->grad));
    }

    /// Scalar convenience accessors (any dtype, returns/accepts double).
    double item() const;
    double get(const std::vector<int64_t>& index) const;
    void set(const std::vector<int64_t>& index, double value);
    double grad_get(const std::vector<int64_t>& index) const;
    /// Flat (row-major) accessors.
    double get_flat(int64_t i) const;
    void set_flat(int64_t i, double value);
    double grad_get_flat(int64_t i) const;

    /// Deep copy of values (grad not copied, requires_grad preserved).
    Tensor clone() const;
    /// Value copy converted to another dtype (requires_grad dropped).
    Tensor astype(DType dt) const;

    /// Raw value bytes (for hashing / bit-identity checks).
    std::vector<uint8_t> value_bytes() const;

    /// Identity of the underlying buffer (used by the tape).
    const void* id() const { return impl_.get(); }
    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

private:
    template <typename T>
    void check_dtype() const {
        if (!impl_) throw ContractError("tensor: undefined");
        if (!std::holds_alternative<std::vector<T>>(impl_->data))
            throw ContractError(cat("tensor: dtype access mismatch, tensor is ", dtype_name(impl_->dtype)));
    }
    std::shared_ptr<TensorImpl> impl_;
};

int64_t ravel_index(const std::vector<int64_t>& index, const std::vector<int64_t>& shape);
std::vector<int64_t> unravel_index(int64_t flat, const std::vector<int64_t>& shape);

/// In-place random fills (parameter initialization).
void fill_normal(Tensor& t, Rng& rng, double mean, double stddev);
void fill_uniform(Tensor& t, Rng& rng, double lo, double hi);

}  // namespace umamba

#endif
