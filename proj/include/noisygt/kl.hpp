#pragma once

// Binary information measures in nats, with the boundary cases the bound
// formulas rely on spelled out explicitly.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace noisygt {

inline constexpr double inf = std::numeric_limits<double>::infinity();

// KL divergence between Bernoulli(r) and Bernoulli(s).
//
// Extended by continuity in r: KL(0||s) = -log(1-s), KL(1||s) = -log(s).
// For degenerate s the divergence is infinite unless r matches: KL(r||0) is
// +inf for r > 0 and KL(r||1) is +inf for r < 1.
//
// Written with log1p of the difference rather than log of the ratio.  The
// objectives downstream evaluate KL at points a rounding error away from the
// reference (r = s + O(1e-12)); log(r/s) carries ~1e-16 absolute noise from
// the division which can make the result negative and flip optimizer
// brackets, while the log1p form degrades gracefully to (r-s)^2/(2s(1-s)).
inline double kl_bernoulli(double r, double s) {
    if (!(r >= 0.0 && r <= 1.0 && s >= 0.0 && s <= 1.0))
        throw std::domain_error("kl_bernoulli: arguments must lie in [0,1]");
    if (r == s) return 0.0;
    if (s == 0.0) return (r == 0.0) ? 0.0 : inf;
    if (s == 1.0) return (r == 1.0) ? 0.0 : inf;
    double acc = 0.0;
    if (r > 0.0) acc += r * std::log1p((r - s) / s);
    if (r < 1.0) acc += (1.0 - r) * std::log1p((s - r) / (1.0 - s));
    return acc < 0.0 ? 0.0 : acc;
}

// Binary entropy in nats.
inline double binary_entropy(double r) {
    if (!(r >= 0.0 && r <= 1.0))
        throw std::domain_error("binary_entropy: argument must lie in [0,1]");
    if (r == 0.0 || r == 1.0) return 0.0;
    return -r * std::log(r) - (1.0 - r) * std::log1p(-r);
}

// Correction term v(x, y) = y - x + (1 - x) log((1 - y)/(1 - x)) that turns a
// Bernoulli KL into its sparse-pool (Poisson) limit.  Negative whenever
// x != y; v(x, x) = 0.
inline double kl_poisson_correction(double x, double y) {
    if (!(x >= 0.0 && x < 1.0 && y >= 0.0 && y < 1.0))
        throw std::domain_error("kl_poisson_correction: arguments must lie in [0,1)");
    return y - x + (1.0 - x) * (std::log1p(-y) - std::log1p(-x));
}

// Poisson-rate divergence x log(x/y) + y - x.  Identical to
// kl_bernoulli(x, y) + kl_poisson_correction(x, y) after the logarithmic
// terms cancel, but free of that cancellation, so it stays accurate near
// x = y and at x = 0.
inline double kl_poisson_rate(double x, double y) {
    if (!(x >= 0.0) || !(y >= 0.0))
        throw std::domain_error("kl_poisson_rate: arguments must be nonnegative");
    if (x == 0.0) return y;
    if (y == 0.0) return inf;
    const double d = x * std::log(x / y) + y - x;
    return d < 0.0 ? 0.0 : d;
}

// k KL(x d / k || y d / k): the divergence actually paid per item when a
// Bernoulli design puts each item in a given test with probability d/k.
// Decreases to d * kl_poisson_rate(x, y) as k grows.
inline double scaled_kl(double x, double y, double d, double k) {
    if (!(d > 0.0) || !(k > 0.0))
        throw std::domain_error("scaled_kl: d and k must be positive");
    const double r = x * d / k;
    const double s = y * d / k;
    if (!(r <= 1.0 && s <= 1.0))
        throw std::domain_error("scaled_kl: x d / k and y d / k must not exceed 1");
    return k * kl_bernoulli(r, s);
}

}  // namespace noisygt
