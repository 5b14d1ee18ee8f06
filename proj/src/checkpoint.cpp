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
#include "umamba/checkpoint.hpp"

#include <cstring>

#include "umamba/tensor_io.hpp"

namespace umamba {

namespace {

template <typename T>
void append_raw(std::vector<uint8_t>& out, const T& v) {
    const auto* p = reinterpret_cast<const uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T read_raw(const std::vector<uint8_t>& in, size_t& off) {
    if (off + sizeof(T) > in.size()) throw IoError("checkpoint: truncated file");
    T v;
    std::memcpy(&v, in.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
}

void append_string(std::vector<uint8_t>& out, const std::string& s) {
    append_raw<uint64_t>(out, s.size());
    out.insert(out.end(), s.begin(), s.end());
}

std::string read_string(const std::vector<uint8_t>& in, size_t& off) {
    uint64_t n = read_raw<uint64_t>(in, off);
    if (off + n > in.size()) throw IoError("checkpoint: truncated string");
    std::string s(reinterpret_cast<const char*>(in.data() + off), n);
    off += n;
    return s;
}

void append_section(std::vector<uint8_t>& out, const std::vector<std::pair<std::string, Tensor>>& entries) {
    append_raw<uint32_t>(out, static_cast<uint32_t>(entries.size()));
    for (const auto& [name, t] : entries) {
        append_raw<uint16_t>(out, static_cast<uint16_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        auto blob = tensor_to_umtn(t);
        append_raw<uint64_t>(out, blob.size());
        out.insert(out.end(), blob.begin(), blob.end());
    }
}

std::vector<std::pair<std::string, Tensor>> read_section(const std::vector<uint8_t>& in, size_t& off) {
    uint32_t count = read_raw<uint32_t>(in, off);
    std::vector<std::pair<std::string, Tensor>> entries;
    entries.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        uint16_t name_len = read_raw<uint16_t>(in, off);
        if (off + name_len > in.size()) throw IoError("checkpoint: truncated name");
        std::string name(reinterpret_cast<const char*>(in.data() + off), name_len);
        off += name_len;
        uint64_t blob_len = read_raw<uint64_t>(in, off);
        if (off + blob_len > in.size()) throw IoError("checkpoint: truncated tensor blob");
        std::vector<uint8_t> blob(in.begin() + static_cast<ptrdiff_t>(off),
                                  in.begin() + static_cast<ptrdiff_t>(off + blob_len));
        off += blob_len;
        entries.emplace_back(name, tensor_from_umtn(blob));
    }
    return entries;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
    std::vector<uint8_t> out;
    out.push_back('U');
    out.push_back('M');
    out.push_back('C');
    out.push_back('K');
    append_raw<uint16_t>(out, 1);
    size_t payload_start = out.size();
    append_string(out, plan.to_json());
    append_raw<uint64_t>(out, static_cast<uint64_t>(epoch));
    append_string(out, rng_state);
    append_section(out, params);
    append_section(out, optim_state);
    uint64_t checksum = fnv1a64(out.data() + payload_start, out.size() - payload_start);
    append_raw<uint64_t>(out, checksum);
    write_file_bytes(path, out);
}

Checkpoint Checkpoint::load(const std::string& path) {
    auto bytes = read_file_bytes(path);
    if (bytes.size() < 14 || bytes[0] != 'U' || bytes[1] != 'M' || bytes[2] != 'C' || bytes[3] != 'K')
        throw IoError(cat("checkpoint ", path, ": bad magic"));
    size_t off = 4;
    uint16_t version = read_raw<uint16_t>(bytes, off);
    if (version != 1) throw IoError(cat("checkpoint: unsupported version ", version));
    size_t payload_start = off;
    uint64_t stored;
    std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
    uint64_t computed = fnv1a64(bytes.data() + payload_start, bytes.size() - payload_start - 8);
    if (stored != computed) throw IoError(cat("checkpoint ", path, ": checksum mismatch"));
    Checkpoint ck;
    ck.plan = NetworkPlan::from_json(read_string(bytes, off));
    ck.epoch = static_cast<int64_t>(read_raw<uint64_t>(bytes, off));
    ck.rng_state = read_string(bytes, off);
    ck.params = read_section(bytes, off);
    ck.optim_state = read_section(bytes, off);
    return ck;
}

Checkpoint Checkpoint::capture(const Network& net, int64_t epoch, const std::string& rng_state,
                               std::vector<std::pair<std::string, Tensor>> optim_state) {
    Checkpoint ck;
    ck.plan = net.plan();
    ck.epoch = epoch;
    ck.rng_state = rng_state;
    for (const auto& [name, t] : net.parameters().items) ck.params.emplace_back(name, t.clone());
    ck.optim_state = std::move(optim_state);
    return ck;
}

void Checkpoint::restore_into(Network& net) const {
    auto live = net.parameters();
    if (live.items.size() != params.size())
        throw IoError(cat("checkpoint: ", params.size(), " tensors vs network's ", live.items.size()));
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& [name, stored] = params[i];
        auto& [live_name, live_t] = live.items[i];
        if (live_name != name)
            throw IoError(cat("checkpoint: parameter order mismatch at ", i, ": ", name, " vs ", live_name));
        if (stored.shape() != live_t.shape())
            throw IoError(cat("checkpoint: shape mismatch for ", name));
        Tensor dst = live_t;
        int64_t n = dst.numel();
        if (stored.dtype() != dst.dtype())
            throw IoError(cat("checkpoint: dtype mismatch for ", name));
        for (int64_t j = 0; j < n; ++j) dst.set_flat(j, stored.get_flat(j));
    }
}

Network Checkpoint::instantiate(uint64_t seed) const {
    DType dt = params.empty() ? DType::F32 : params.front().second.dtype();
    Network net(plan, dt, seed);
    restore_into(net);
    return net;
}

}  // namespace umamba
