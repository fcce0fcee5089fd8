// Copyright 2026 The qtraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace qtraj {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based stream keyed by (seed, stream index).
///
/// The i-th output is a pure function of the key and i, so a trajectory's
/// draws do not depend on which worker runs it or in what order. Doubles are
/// produced with explicit bit manipulation and Box-Muller rather than the
/// implementation-defined std distributions.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix64(seed ^ mix64(stream + 0x9e3779b97f4a7c15ULL)))
    {
    }

    std::uint64_t next_u64()
    {
        ++counter_;
        return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open_zero() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    /// Standard normal; consumes exactly two counter values.
    double normal()
    {
        const double r = std::sqrt(-2.0 * std::log(uniform_open_zero()));
        return r * std::cos(2.0 * std::numbers::pi * uniform());
    }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace qtraj
