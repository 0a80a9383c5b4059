#pragma once

// Pooling designs, infection vectors, test outcomes through the noise
// channel, and the per-item / per-test statistics the decoders consume.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "channel.hpp"
#include "common.hpp"
#include "rng.hpp"

namespace noisygt {

struct PoolingDesign {
    std::uint32_t n = 0;
    std::uint32_t m = 0;
    // Exact per-item degree for constant-column; nominal expected degree
    // (inclusion probability times m) for Bernoulli.
    double delta = 0.0;
    DesignKind kind = DesignKind::ConstantColumn;
    std::uint64_t seed = 0;
    std::vector<std::vector<std::uint32_t>> item_tests;  // sorted per item
    std::vector<std::vector<std::uint32_t>> test_items;  // transpose, sorted per test
};

struct InfectionVector {
    std::uint32_t n = 0;
    std::vector<std::uint32_t> infected;  // sorted
    std::vector<std::uint8_t> mask;       // mask[x] = 1 iff infected
};

enum class OutcomeStage { True, Displayed };

struct OutcomeVector {
    std::uint32_t m = 0;
    OutcomeStage stage = OutcomeStage::True;
    std::vector<std::uint8_t> bits;
};

struct TestStatistics {
    std::uint32_t m0 = 0, m1 = 0;    // truly negative / positive tests
    std::uint32_t m0f = 0, m0u = 0;  // truly negative: flipped / unflipped
    std::uint32_t m1f = 0, m1u = 0;  // truly positive: flipped / unflipped
    std::uint32_t gamma_min = 0, gamma_max = 0;  // test-degree extremes
};

inline PoolingDesign constant_column_design(std::uint32_t n, std::uint32_t m, std::uint32_t delta,
                                            std::uint64_t seed) {
    if (n < 1 || m < 1) throw std::invalid_argument("constant_column_design: n and m must be >= 1");
    if (delta < 1 || delta > m)
        throw std::invalid_argument("constant_column_design: delta must lie in [1, m]");
    PoolingDesign g;
    g.n = n;
    g.m = m;
    g.delta = delta;
    g.kind = DesignKind::ConstantColumn;
    g.seed = seed;
    g.item_tests.resize(n);
    g.test_items.resize(m);
    Xoshiro256 rng(seed, 0, Stream::Design);
    for (std::uint32_t x = 0; x < n; ++x) {
        g.item_tests[x] = sample_distinct(rng, m, delta);
        for (std::uint32_t a : g.item_tests[x]) g.test_items[a].push_back(x);
    }
    return g;
}

inline PoolingDesign bernoulli_design(std::uint32_t n, std::uint32_t m, double nu,
                                      std::uint64_t seed) {
    if (n < 1 || m < 1) throw std::invalid_argument("bernoulli_design: n and m must be >= 1");
    if (!(nu > 0.0 && nu <= 1.0)) throw std::invalid_argument("bernoulli_design: nu must lie in (0,1]");
    PoolingDesign g;
    g.n = n;
    g.m = m;
    g.delta = nu * m;
    g.kind = DesignKind::Bernoulli;
    g.seed = seed;
    g.item_tests.resize(n);
    g.test_items.resize(m);
    Xoshiro256 rng(seed, 0, Stream::Design);
    const std::uint64_t thr = rng.coin_threshold(nu);
    for (std::uint32_t x = 0; x < n; ++x) {
        for (std::uint32_t a = 0; a < m; ++a) {
            if (rng.coin(thr)) {
                g.item_tests[x].push_back(a);
                g.test_items[a].push_back(x);
            }
        }
    }
    return g;
}

inline InfectionVector sample_infection(std::uint32_t n, std::uint32_t k, std::uint64_t seed) {
    if (k > n) throw std::invalid_argument("sample_infection: k must not exceed n");
    InfectionVector sigma;
    sigma.n = n;
    sigma.mask.assign(n, 0);
    Xoshiro256 rng(seed, 0, Stream::Infection);
    sigma.infected = sample_distinct(rng, n, k);
    for (std::uint32_t x : sigma.infected) sigma.mask[x] = 1;
    return sigma;
}

inline OutcomeVector true_outcomes(const PoolingDesign& g, const InfectionVector& sigma) {
    if (g.n != sigma.n) throw std::invalid_argument("true_outcomes: dimension mismatch");
    OutcomeVector out;
    out.m = g.m;
    out.stage = OutcomeStage::True;
    out.bits.assign(g.m, 0);
    for (std::uint32_t x : sigma.infected)
        for (std::uint32_t a : g.item_tests[x]) out.bits[a] = 1;
    return out;
}

// One RNG draw per test regardless of its value, so the displayed outcome of
// test a depends only on (seed, a) and the true bit, never on other bits.
inline OutcomeVector apply_channel(const OutcomeVector& truth, const ChannelParams& ch,
                                   std::uint64_t seed) {
    if (truth.stage != OutcomeStage::True)
        throw std::invalid_argument("apply_channel: input must be true outcomes");
    OutcomeVector out;
    out.m = truth.m;
    out.stage = OutcomeStage::Displayed;
    out.bits.resize(truth.m);
    Xoshiro256 rng(seed, 0, Stream::Channel);
    const std::uint64_t tp = rng.coin_threshold(ch.p);
    const std::uint64_t tq = rng.coin_threshold(ch.q);
    for (std::uint32_t a = 0; a < truth.m; ++a) {
        const bool flip = rng.coin(truth.bits[a] ? tq : tp);
        out.bits[a] = static_cast<std::uint8_t>(truth.bits[a] ^ static_cast<std::uint8_t>(flip));
    }
    return out;
}

inline TestStatistics collect_statistics(const PoolingDesign& g, const InfectionVector&,
                                         const OutcomeVector& truth,
                                         const OutcomeVector& displayed) {
    if (truth.m != g.m || displayed.m != g.m)
        throw std::invalid_argument("collect_statistics: dimension mismatch");
    TestStatistics s;
    for (std::uint32_t a = 0; a < g.m; ++a) {
        const bool t = truth.bits[a];
        const bool flipped = truth.bits[a] != displayed.bits[a];
        if (t) {
            ++s.m1;
            flipped ? ++s.m1f : ++s.m1u;
        } else {
            ++s.m0;
            flipped ? ++s.m0f : ++s.m0u;
        }
    }
    s.gamma_min = ~std::uint32_t{0};
    s.gamma_max = 0;
    for (const auto& pool : g.test_items) {
        const auto deg = static_cast<std::uint32_t>(pool.size());
        s.gamma_min = std::min(s.gamma_min, deg);
        s.gamma_max = std::max(s.gamma_max, deg);
    }
    if (g.m == 0) s.gamma_min = 0;
    return s;
}

// N[x]: displayed-negative tests containing x.
inline std::vector<std::uint32_t> negative_counts(const PoolingDesign& g,
                                                  const OutcomeVector& displayed) {
    if (displayed.m != g.m) throw std::invalid_argument("negative_counts: dimension mismatch");
    std::vector<std::uint32_t> counts(g.n, 0);
    for (std::uint32_t x = 0; x < g.n; ++x)
        for (std::uint32_t a : g.item_tests[x])
            if (!displayed.bits[a]) ++counts[x];
    return counts;
}

// P[x]: displayed-positive tests in which every member other than x is
// definitely healthy.  Walking tests instead of items makes this O(edges):
// a test with zero unclassified members credits all its members, one with a
// single unclassified member credits that member alone.
inline std::vector<std::uint32_t> positive_solo_counts(const PoolingDesign& g,
                                                       const OutcomeVector& displayed,
                                                       const std::vector<std::uint8_t>& healthy) {
    if (displayed.m != g.m || healthy.size() != g.n)
        throw std::invalid_argument("positive_solo_counts: dimension mismatch");
    std::vector<std::uint32_t> counts(g.n, 0);
    for (std::uint32_t a = 0; a < g.m; ++a) {
        if (!displayed.bits[a]) continue;
        std::uint32_t unclassified = 0;
        std::uint32_t last = 0;
        for (std::uint32_t x : g.test_items[a]) {
            if (!healthy[x]) {
                ++unclassified;
                last = x;
                if (unclassified > 1) break;
            }
        }
        if (unclassified == 1) {
            ++counts[last];
        } else if (unclassified == 0) {
            for (std::uint32_t x : g.test_items[a]) ++counts[x];
        }
    }
    return counts;
}

// ---------------------------------------------------------------------------
// Serialization: versioned plain-text header, then one line per item.

inline void write_design(const PoolingDesign& g, std::ostream& os) {
    os << "noisygt-design 1\n";
    os << "kind " << design_kind_name(g.kind) << "\n";
    os << "n " << g.n << "\n";
    os << "m " << g.m << "\n";
    std::ostringstream delta;
    delta.precision(17);
    delta << g.delta;
    os << "delta " << delta.str() << "\n";
    os << "seed " << g.seed << "\n";
    for (const auto& tests : g.item_tests) {
        for (std::size_t i = 0; i < tests.size(); ++i) {
            if (i) os << ' ';
            os << tests[i];
        }
        os << '\n';
    }
}

inline PoolingDesign read_design(std::istream& is) {
    auto expect_field = [&](const char* name) -> std::string {
        std::string key, value;
        if (!(is >> key) || key != name)
            throw std::runtime_error(std::string("read_design: expected field ") + name);
        if (!(is >> value)) throw std::runtime_error("read_design: truncated header");
        return value;
    };
    std::string magic, version;
    if (!(is >> magic >> version) || magic != "noisygt-design")
        throw std::runtime_error("read_design: not a design file");
    if (version != "1") throw std::runtime_error("read_design: unsupported version " + version);
    PoolingDesign g;
    const std::string kind = expect_field("kind");
    if (kind == design_kind_name(DesignKind::ConstantColumn)) {
        g.kind = DesignKind::ConstantColumn;
    } else if (kind == design_kind_name(DesignKind::Bernoulli)) {
        g.kind = DesignKind::Bernoulli;
    } else {
        throw std::runtime_error("read_design: unknown kind " + kind);
    }
    g.n = static_cast<std::uint32_t>(std::stoul(expect_field("n")));
    g.m = static_cast<std::uint32_t>(std::stoul(expect_field("m")));
    g.delta = std::stod(expect_field("delta"));
    g.seed = std::stoull(expect_field("seed"));
    std::string header_tail;
    std::getline(is, header_tail);  // finish the seed line; item lines may be empty
    g.item_tests.resize(g.n);
    g.test_items.resize(g.m);
    std::string line;
    for (std::uint32_t x = 0; x < g.n; ++x) {
        if (!std::getline(is, line)) throw std::runtime_error("read_design: truncated item lines");
        std::istringstream ls(line);
        std::uint32_t a;
        while (ls >> a) {
            if (a >= g.m) throw std::runtime_error("read_design: test index out of range");
            g.item_tests[x].push_back(a);
        }
        std::sort(g.item_tests[x].begin(), g.item_tests[x].end());
        for (std::uint32_t t : g.item_tests[x]) g.test_items[t].push_back(x);
    }
    return g;
}

}  // namespace noisygt
