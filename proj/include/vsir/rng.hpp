/*
* Copyright (C) 2026 The vsir authors
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
#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace vsir
{

/// Tags separating the independent random substreams of one run.
enum class StreamTag : std::uint64_t
{
    Position   = 0x706f73,
    Trajectory = 0x747261,
    Candidates = 0x63616e,
    Replicate  = 0x726570,
    Test       = 0x746573,
};

inline std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Hash a master seed and a list of integer keys into a substream key.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys)
{
    std::uint64_t h = mix64(master + 0x9e3779b97f4a7c15ULL);
    for (auto k : keys) {
        h = mix64(h ^ mix64(k + 0x9e3779b97f4a7c15ULL));
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t master, StreamTag tag, std::uint64_t index)
{
    return derive_seed(master, {static_cast<std::uint64_t>(tag), index});
}

/**
 * Counter-based 64-bit generator (SplitMix64 output function over a keyed
 * counter). Satisfies UniformRandomBitGenerator, so it also plugs into the
 * standard distributions, but the helpers below are used where bit-exact
 * results across standard libraries matter.
 */
class RandomStream
{
public:
    using result_type = std::uint64_t;

    explicit RandomStream(std::uint64_t key = 0)
        : m_key(key)
    {
    }

    static constexpr result_type min()
    {
        return 0;
    }
    static constexpr result_type max()
    {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()()
    {
        m_counter += 0x9e3779b97f4a7c15ULL;
        return mix64(m_key + m_counter);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform()
    {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi)
    {
        return lo + (hi - lo) * uniform();
    }

    double exponential(double rate)
    {
        return -std::log1p(-uniform()) / rate;
    }

    /// Index drawn from a discrete distribution with cumulative weights `cdf` (last entry = 1).
    template <class Range>
    std::size_t discrete(const Range& cdf)
    {
        const double u = uniform();
        std::size_t i  = 0;
        for (auto c : cdf) {
            if (u < c) {
                return i;
            }
            ++i;
        }
        return i == 0 ? 0 : i - 1;
    }

private:
    std::uint64_t m_key;
    std::uint64_t m_counter = 0;
};

} // namespace vsir
