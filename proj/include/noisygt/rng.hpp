#pragma once

// Deterministic random number generation with named substreams.
//
// Everything here is fixed-width integer arithmetic, so a given (seed, trial,
// stream) triple produces the same draws on every platform and compiler.  The
// standard <random> engines are portable but the distributions are not, which
// is why bounded integers and Bernoulli coins are implemented directly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace noisygt {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Independent substreams of one experiment.  The stream label enters the
// state derivation but the pooling-multiplier and algorithm do not, so trials
// with the same (seed, trial) index see identical designs, infection sets and
// channel noise: comparisons across decoders and test budgets are paired.
enum class Stream : std::uint64_t {
    Design = 1,
    Infection = 2,
    Channel = 3,
};

class Xoshiro256 {
  public:
    Xoshiro256(std::uint64_t seed, std::uint64_t trial, Stream stream) {
        std::uint64_t sm = seed;
        sm ^= 0xa076'1d64'78bd'642fULL * (trial + 1);
        sm ^= 0xe703'7ed1'a0b4'28dbULL * (static_cast<std::uint64_t>(stream) + 1);
        s_[0] = splitmix64_next(sm);
        s_[1] = splitmix64_next(sm);
        s_[2] = splitmix64_next(sm);
        s_[3] = splitmix64_next(sm);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;  // all-zero state is absorbing
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Unbiased integer in [0, n) via multiply-shift with rejection.
    std::uint64_t next_below(std::uint64_t n) {
        __uint128_t mul = static_cast<__uint128_t>(next_u64()) * n;
        auto low = static_cast<std::uint64_t>(mul);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                mul = static_cast<__uint128_t>(next_u64()) * n;
                low = static_cast<std::uint64_t>(mul);
            }
        }
        return static_cast<std::uint64_t>(mul >> 64);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Coin flips are compared against an integer threshold so that the
    // accept/reject decision never depends on floating-point rounding mode.
    std::uint64_t coin_threshold(double p) const {
        if (p <= 0.0) return 0;
        if (p >= 1.0) return std::uint64_t{1} << 53;
        return static_cast<std::uint64_t>(std::llround(p * 0x1.0p53));
    }

    bool coin(std::uint64_t threshold) { return (next_u64() >> 11) < threshold; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

// Per-trial seeds for independent Monte-Carlo instances; the trial index is
// folded in before the per-stream split so that every stream of trial i is
// independent of every stream of trial j.
inline std::uint64_t derive_trial_seed(std::uint64_t seed, std::uint64_t trial) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (trial + 1));
    return splitmix64_next(s);
}

// k distinct values from [0, n), ascending.  Partial Fisher-Yates over a
// sparse map, O(k) memory, so sampling 20 tests out of a million stays cheap.
inline std::vector<std::uint32_t> sample_distinct(Xoshiro256& rng, std::uint64_t n, std::uint64_t k) {
    std::unordered_map<std::uint64_t, std::uint64_t> moved;
    moved.reserve(2 * k);
    std::vector<std::uint32_t> out;
    out.reserve(k);
    for (std::uint64_t i = 0; i < k; ++i) {
        const std::uint64_t j = i + rng.next_below(n - i);
        auto it_j = moved.find(j);
        const std::uint64_t value_j = (it_j == moved.end()) ? j : it_j->second;
        auto it_i = moved.find(i);
        const std::uint64_t value_i = (it_i == moved.end()) ? i : it_i->second;
        moved[j] = value_i;
        out.push_back(static_cast<std::uint32_t>(value_j));
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace noisygt
