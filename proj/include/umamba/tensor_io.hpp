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
#ifndef UMAMBA_TENSOR_IO_HPP
#define UMAMBA_TENSOR_IO_HPP

#include <string>
#include <vector>

#include "umamba/tensor.hpp"

namespace umamba {

// UMTN binary tensor format:
//   magic "UMTN" | version u16 = 1 | dtype u8 (0=f32, 1=f64, 2=u8) |
//   rank u8 | extents u64[rank] | raw row-major data
// All multi-byte fields little-endian.

std::vector<uint8_t> tensor_to_umtn(const Tensor& t);
Tensor tensor_from_umtn(const std::vector<uint8_t>& bytes);

void write_tensor(const std::string& path, const Tensor& t);
Tensor read_tensor(const std::string& path);

std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes);

/// FNV-1a 64-bit, used for checkpoint payload integrity.
uint64_t fnv1a64(const uint8_t* data, size_t n, uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace umamba

#endif
