#pragma once

// The p-q test noise channel and its Shannon capacity.
//
// A truly negative test displays positive with probability p, a truly
// positive test displays negative with probability q.  Channels with
// p + q > 1 carry the same information as their bit-flipped counterpart, so
// they are normalized once at construction; p + q = 1 makes the displayed
// outcome independent of the true one and is rejected.

#include <cmath>
#include <stdexcept>
#include <string>

#include "kl.hpp"

namespace noisygt {

enum class ChannelKind { Noiseless, Symmetric, Z, ReverseZ, General };

struct ChannelParams {
    double p = 0.0;  // false-positive probability
    double q = 0.0;  // false-negative probability
    bool flipped = false;  // true when the inputs had p + q > 1 and were replaced by 1-p, 1-q

    ChannelParams() = default;

    ChannelParams(double p_in, double q_in) : p(p_in), q(q_in) {
        if (!(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0))
            throw std::domain_error("ChannelParams: p and q must lie in [0,1]");
        if (p + q == 1.0)
            throw std::domain_error("ChannelParams: p + q = 1 leaves the displayed outcome independent of the true one");
        if (p + q > 1.0) {
            p = 1.0 - p;
            q = 1.0 - q;
            flipped = true;
        }
    }

    ChannelKind kind() const {
        if (p == 0.0 && q == 0.0) return ChannelKind::Noiseless;
        if (p == q) return ChannelKind::Symmetric;
        if (p == 0.0) return ChannelKind::Z;
        if (q == 0.0) return ChannelKind::ReverseZ;
        return ChannelKind::General;
    }

    // Probability that a test containing a fixed healthy item displays
    // negative, when the number of infected items it additionally contains is
    // Poisson(d): with probability e^{-d} the test is truly negative.
    double healthy_negative_rate(double d) const {
        const double e = std::exp(-d);
        return e * (1.0 - p) + (1.0 - e) * q;
    }

    // Complement of the above: displayed-positive rate for such a test.
    double healthy_positive_rate(double d) const {
        const double e = std::exp(-d);
        return e * p + (1.0 - e) * (1.0 - q);
    }

    // Probability that a test containing a fixed infected item contains no
    // other infected item and displays positive.
    double solo_positive_rate(double d) const { return std::exp(-d) * (1.0 - q); }

    // Conditional probability that a displayed-positive test containing a
    // fixed healthy item is truly negative.
    double false_positive_share(double d) const {
        const double w = healthy_positive_rate(d);
        return w > 0.0 ? std::exp(-d) * p / w : 0.0;
    }
};

inline const char* channel_kind_name(ChannelKind k) {
    switch (k) {
        case ChannelKind::Noiseless: return "noiseless";
        case ChannelKind::Symmetric: return "symmetric";
        case ChannelKind::Z: return "z";
        case ChannelKind::ReverseZ: return "reverse-z";
        default: return "general";
    }
}

struct CapacityResult {
    double capacity_nats = 0.0;
    double phi = 0.0;        // (h(p) - h(q)) / (1 - p - q)
    double t_star = 0.0;     // capacity-achieving displayed-negative probability
    double gamma_star = 0.0; // capacity-achieving truly-negative probability
    double d_heuristic = 0.0;  // -log(gamma_star), the density that realizes gamma_star

    double capacity_bits() const { return capacity_nats / std::log(2.0); }
};

// Capacity of the p-q channel under an input distribution constrained to the
// one-parameter family induced by pooling (truly negative with probability
// gamma).  phi = (h(p) - h(q)) / (1 - p - q); the optimal displayed-negative
// probability is T* = 1 / (1 + e^phi), and C = KL(q || T*) = KL(p || 1 - T*).
inline CapacityResult channel_capacity(const ChannelParams& ch) {
    CapacityResult res;
    if (ch.p == 0.0 && ch.q == 0.0) {
        res.capacity_nats = std::log(2.0);
        res.phi = 0.0;
        res.t_star = 0.5;
        res.gamma_star = 0.5;
        res.d_heuristic = std::log(2.0);
        return res;
    }
    // p == q makes the numerator exactly zero, so no special case is needed
    // for symmetric channels: T* = 1/2 falls out in floating point too.
    res.phi = (binary_entropy(ch.p) - binary_entropy(ch.q)) / (1.0 - ch.p - ch.q);
    res.t_star = 1.0 / (1.0 + std::exp(res.phi));
    res.capacity_nats = kl_bernoulli(ch.q, res.t_star);
    res.gamma_star = (res.t_star - ch.q) / (1.0 - ch.p - ch.q);
    res.d_heuristic = -std::log(res.gamma_star);
    return res;
}

}  // namespace noisygt
