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
#ifndef UMAMBA_CHECKPOINT_HPP
#define UMAMBA_CHECKPOINT_HPP

#include <string>
#include <vector>

#include "umamba/network.hpp"

namespace umamba {

// UMCK container:
//   magic "UMCK" | version u16 = 1 |
//   plan json (u64 length + bytes) |
//   epoch u64 | rng state string (u64 length + bytes) |
//   parameters (u32 count, then per entry: u16 name length + name,
//               u64 blob length + UMTN blob) |
//   optimizer state (same layout) |
//   fnv1a64 checksum over everything after the version field.

struct Checkpoint {
    NetworkPlan plan;
    std::vector<std::pair<std::string, Tensor>> params;
    std::vector<std::pair<std::string, Tensor>> optim_state;
    int64_t epoch = 0;
    std::string rng_state;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

    /// Snapshot of the network's current parameter values (deep copies).
    static Checkpoint capture(const Network& net, int64_t epoch, const std::string& rng_state,
                              std::vector<std::pair<std::string, Tensor>> optim_state = {});

    /// Copies stored values into the network's parameters (names and shapes
    /// must match exactly).
    void restore_into(Network& net) const;

    /// Builds a network from the stored plan and parameters.
    Network instantiate(uint64_t seed = 1) const;
};

}  // namespace umamba

#endif
