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
#ifndef UMAMBA_COMMON_HPP
#define UMAMBA_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace umamba {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape or axis mismatch between tensors.
struct DimensionError : Error {
    using Error::Error;
};

/// A caller violated an operation precondition (non-scalar loss, NaN input, ...).
struct ContractError : Error {
    using Error::Error;
};

/// Invalid NetworkPlan (indivisible patch extents, bad stage arithmetic).
struct PlanError : Error {
    using Error::Error;
};

/// File / serialization failure.
struct IoError : Error {
    using Error::Error;
};

/// Numeric failure during optimization (NaN loss or gradient).
struct NumericError : Error {
    using Error::Error;
};

namespace detail {
inline void format_into(std::ostringstream&) {}
template <typename T, typename... Rest>
void format_into(std::ostringstream& os, const T& v, const Rest&... rest) {
    os << v;
    format_into(os, rest...);
}
}  // namespace detail

template <typename... Args>
std::string cat(const Args&... args) {
    std::ostringstream os;
    detail::format_into(os, args...);
    return os.str();
}

inline std::string shape_str(const std::vector<int64_t>& shape) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

/// Deterministic random source. All randomness in the library flows through
/// this class; std::* distributions are avoided because their sequences are
/// implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

    uint64_t next_u64() {
        // splitmix64
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Integer in [lo, hi).
    int64_t randint(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(next_u64() % static_cast<uint64_t>(hi - lo));
    }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Derive an independent stream; the parent's state is not consumed.
    Rng fork(uint64_t stream) const {
        Rng r(state_ ^ (0xd1b54a32d192ed03ULL * (stream + 1)));
        r.next_u64();
        return r;
    }

    std::string serialize() const {
        return cat(state_, " ", have_spare_ ? 1 : 0, " ", spare_);
    }
    static Rng deserialize(const std::string& s) {
        std::istringstream is(s);
        uint64_t st;
        int hs;
        double sp;
        is >> st >> hs >> sp;
        if (!is) throw IoError("rng state: unparseable");
        Rng r(1);
        r.state_ = st;
        r.have_spare_ = hs != 0;
        r.spare_ = sp;
        return r;
    }

private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace umamba

#endif
