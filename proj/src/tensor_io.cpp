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
#include "umamba/tensor_io.hpp"

#include <cstring>
#include <fstream>

namespace umamba {

namespace {

// Writers assume a little-endian host (x86/aarch64); asserted at startup of
// serialization rather than per element.
void check_little_endian() {
    const uint16_t probe = 1;
    uint8_t b;
    std::memcpy(&b, &probe, 1);
    if (b != 1) throw IoError("UMTN: big-endian hosts unsupported");
}

template <typename T>
void append_raw(std::vector<uint8_t>& out, const T& v) {
    const auto* p = reinterpret_cast<const uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T read_raw(const std::vector<uint8_t>& in, size_t& off) {
    if (off + sizeof(T) > in.size()) throw IoError("UMTN: truncated file");
    T v;
    std::memcpy(&v, in.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
}

}  // namespace

std::vector<uint8_t> tensor_to_umtn(const Tensor& t) {
    check_little_endian();
    std::vector<uint8_t> out;
    out.reserve(16 + static_cast<size_t>(t.numel()) * 8);
    out.push_back('U');
    out.push_back('M');
    out.push_back('T');
    out.push_back('N');
    append_raw<uint16_t>(out, 1);
    out.push_back(static_cast<uint8_t>(t.dtype()));
    out.push_back(static_cast<uint8_t>(t.rank()));
    for (int64_t e : t.shape()) append_raw<uint64_t>(out, static_cast<uint64_t>(e));
    auto payload = t.value_bytes();
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

Tensor tensor_from_umtn(const std::vector<uint8_t>& bytes) {
    check_little_endian();
    size_t off = 0;
    if (bytes.size() < 8 || bytes[0] != 'U' || bytes[1] != 'M' || bytes[2] != 'T' || bytes[3] != 'N')
        throw IoError("UMTN: bad magic");
    off = 4;
    uint16_t version = read_raw<uint16_t>(bytes, off);
    if (version != 1) throw IoError(cat("UMTN: unsupported version ", version));
    uint8_t dtype_code = read_raw<uint8_t>(bytes, off);
    if (dtype_code > 2) throw IoError(cat("UMTN: unknown dtype code ", int(dtype_code)));
    DType dt = static_cast<DType>(dtype_code);
    uint8_t rank = read_raw<uint8_t>(bytes, off);
    std::vector<int64_t> shape(rank);
    for (int a = 0; a < rank; ++a) shape[a] = static_cast<int64_t>(read_raw<uint64_t>(bytes, off));
    Tensor t = Tensor::zeros(shape, dt);
    size_t elem = dt == DType::F32 ? 4 : dt == DType::F64 ? 8 : 1;
    size_t need = static_cast<size_t>(t.numel()) * elem;
    if (bytes.size() - off != need)
        throw IoError(cat("UMTN: payload size ", bytes.size() - off, " vs expected ", need));
    switch (dt) {
        case DType::F32: std::memcpy(t.data<float>().data(), bytes.data() + off, need); break;
        case DType::F64: std::memcpy(t.data<double>().data(), bytes.data() + off, need); break;
        case DType::U8: std::memcpy(t.data<uint8_t>().data(), bytes.data() + off, need); break;
    }
    return t;
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(cat("cannot open ", path));
    f.seekg(0, std::ios::end);
    std::streamsize n = f.tellg();
    f.seekg(0, std::ios::beg);
    std::vector<uint8_t> bytes(static_cast<size_t>(n));
    if (n && !f.read(reinterpret_cast<char*>(bytes.data()), n)) throw IoError(cat("cannot read ", path));
    return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(cat("cannot open ", path, " for writing"));
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError(cat("cannot write ", path));
}

void write_tensor(const std::string& path, const Tensor& t) { write_file_bytes(path, tensor_to_umtn(t)); }

Tensor read_tensor(const std::string& path) { return tensor_from_umtn(read_file_bytes(path)); }

uint64_t fnv1a64(const uint8_t* data, size_t n, uint64_t seed) {
    uint64_t h = seed;
    for (size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace umamba
