#pragma once

// Achievability and converse bounds: the rate constants behind the test
// budgets m = c * k * log(n/k), and the optimizers that pick the free
// parameters (alpha, beta, d, z, zeta).
//
// All divergences are in nats.  A constant whose denominator vanishes is
// +inf (that parameter choice is infeasible); a diverging denominator gives
// 0 (the corresponding error event is impossible).

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "channel.hpp"
#include "common.hpp"
#include "kl.hpp"

namespace noisygt {

struct BoundQuery {
    double theta = 0.5;
    ChannelParams channel;
    DesignKind design = DesignKind::ConstantColumn;
    Algorithm algorithm = Algorithm::Comp;

    void validate() const {
        if (!(theta > 0.0 && theta < 1.0))
            throw std::domain_error("BoundQuery: theta must lie strictly in (0,1)");
    }
};

struct BoundResult {
    double prefactor_c = 0.0;  // coefficient of k log(n/k)
    std::optional<double> alpha_star;
    std::optional<double> beta_star;
    double d_star = 0.0;
    std::optional<double> z_star;
    std::optional<double> zeta_star;
    std::string binding_constraint;  // one of b1,b2,c1,c2,c3,c4,converse
    double rate_bits = 0.0;          // 1 / (prefactor_c * log 2)
};

// Grid sizes and the d search window.  The default window [0.02, 6] covers
// every published optimum; beyond d = 6 all denominators carry a factor
// e^{-d} < 0.0025 and the constants only grow.  Both ends are configurable.
struct OptimizerOptions {
    double d_min = 0.02;
    double d_max = 6.0;
    int d_points = 200;        // log-spaced multistart grid in d
    int line_points = 200;     // fine line-search grid for alpha/beta
    int coarse_line_points = 32;
    double rel_tol = 1e-6;
};

namespace detail {

inline double bound_ratio(double coef, double denom) {
    if (denom == 0.0) return inf;
    if (std::isinf(denom)) return 0.0;
    return coef / denom;
}

struct LinePoint {
    double x = 0.0;
    double value = inf;
};

template <class F>
LinePoint golden_section(F&& f, double a, double b, double x_tol) {
    constexpr double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > x_tol) {
        if (f1 <= f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? LinePoint{x1, f1} : LinePoint{x2, f2};
}

// Grid scan plus golden-section refinement around the best cell.  Robust to
// the kinks a max-of-ratios objective has at constraint crossings.
template <class F>
LinePoint line_minimum(F&& f, double lo, double hi, int grid_points, double x_tol) {
    if (!(hi > lo)) return {lo, f(lo)};
    LinePoint best;
    int best_i = 0;
    const double step = (hi - lo) / (grid_points - 1);
    for (int i = 0; i < grid_points; ++i) {
        const double x = (i == grid_points - 1) ? hi : lo + step * i;
        const double v = f(x);
        if (v < best.value) {
            best = {x, v};
            best_i = i;
        }
    }
    const double bl = lo + step * std::max(0, best_i - 1);
    const double bh = std::min(hi, lo + step * (best_i + 1));
    LinePoint refined = golden_section(f, bl, bh, x_tol);
    return refined.value < best.value ? refined : best;
}

inline std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g(static_cast<std::size_t>(n));
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = std::exp(llo + (lhi - llo) * i / (n - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

// Indices of local minima of a scan, best first, at most `keep` of them.
// Refining more than one guards against the outer objective in d not being
// unimodal (nothing proven either way).
inline std::vector<int> local_minima(const std::vector<double>& v, int keep) {
    std::vector<int> idx;
    const int n = static_cast<int>(v.size());
    for (int i = 0; i < n; ++i) {
        const double left = i > 0 ? v[static_cast<std::size_t>(i - 1)] : inf;
        const double right = i + 1 < n ? v[static_cast<std::size_t>(i + 1)] : inf;
        const double c = v[static_cast<std::size_t>(i)];
        if (c <= left && c <= right && std::isfinite(c)) idx.push_back(i);
    }
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return v[static_cast<std::size_t>(a)] < v[static_cast<std::size_t>(b)];
    });
    if (static_cast<int>(idx.size()) > keep) idx.resize(static_cast<std::size_t>(keep));
    return idx;
}

// The optimizers stay a hair inside the closed parameter intervals: the
// deleted endpoints always carry one +inf constant, while the objective's
// infimum may sit at the boundary (reverse-Z pushes alpha -> 0).  An inset
// of span * 1e-12 approximates the limiting value to ~12 digits.
inline constexpr double interval_inset = 1e-12;

}  // namespace detail

// ---------------------------------------------------------------------------
// COMP, constant-column design

struct CompConstants {
    double b1 = 0.0, b2 = 0.0;
    double value() const { return std::max(b1, b2); }
    const char* binding() const { return b1 >= b2 ? "b1" : "b2"; }
};

namespace detail {

// No domain validation: the optimizers guarantee alpha in range.
inline CompConstants comp_eval(double alpha, double d, double theta, const ChannelParams& ch,
                               double a_ref) {
    const double t = theta / (1.0 - theta);
    return {bound_ratio(t, d * kl_bernoulli(alpha, ch.q)),
            bound_ratio(1.0 / (1.0 - theta), d * kl_bernoulli(alpha, a_ref))};
}

}  // namespace detail

// Error exponents of the two COMP failure modes at threshold alpha and test
// density d: b1 covers infected items displaying too many negatives, b2
// covers healthy items displaying too few.
inline CompConstants comp_constants(double alpha, double d, double theta, const ChannelParams& ch) {
    if (!(theta > 0.0 && theta < 1.0)) throw std::domain_error("comp_constants: theta must lie in (0,1)");
    if (!(d > 0.0)) throw std::domain_error("comp_constants: d must be positive");
    const double a_ref = ch.healthy_negative_rate(d);
    if (!(alpha >= ch.q && alpha <= a_ref))
        throw std::domain_error("comp_constants: alpha outside [q, e^{-d}(1-p)+(1-e^{-d})q]");
    return detail::comp_eval(alpha, d, theta, ch, a_ref);
}

// ---------------------------------------------------------------------------
// DD, constant-column design

struct DdConstants {
    double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
    std::optional<double> z_star;  // absent when c4 = 0 (no test statistic deviates)
    double value() const { return std::max(std::max(c1, c2), std::max(c3, c4)); }
    const char* binding() const {
        const double v = value();
        if (c1 == v) return "c1";
        if (c2 == v) return "c2";
        if (c3 == v) return "c3";
        return "c4";
    }
};

namespace detail {

// Exponent of the stage-2 false-positive event at displayed-positive share z:
// the z-fraction of a healthy item's tests display positive (rate KL(z||w))
// and, when beta > z r, too few of those are flips of truly negative tests.
inline double dd_stage2_exponent(double z, double beta, double w, double r) {
    double acc = kl_bernoulli(z, w);
    if (beta > z * r) {
        if (beta > z || r == 0.0) return inf;
        acc += z * kl_bernoulli(beta / z, r);
    }
    return acc;
}

struct ZSolve {
    double exponent = inf;
    std::optional<double> z;
};

struct ZOptions {
    int grid = 33;
    double tol_scale = 1e-9;  // times the interval width
};

// Minimize the stage-2 exponent over z in [1-alpha, 1].  The exponent is
// convex where finite (and +inf for z < beta), so a bracketing scan plus
// golden section is exact enough at any grid size; the scan only has to
// land one point in the finite region.
inline ZSolve minimize_stage2_exponent(double alpha, double beta, double w, double r,
                                       const ZOptions& zopt) {
    const double lo = 1.0 - alpha;
    const double hi = 1.0;
    auto f = [&](double z) { return dd_stage2_exponent(z, beta, w, r); };
    LinePoint best = line_minimum(f, lo, hi, zopt.grid, std::max(hi - lo, 1e-6) * zopt.tol_scale);
    if (std::isinf(best.value)) return {inf, std::nullopt};
    return {best.value, best.x};
}

inline DdConstants dd_eval(double alpha, double beta, double d, double theta,
                           const ChannelParams& ch, const ZOptions& zopt) {
    DdConstants c;
    const double t = theta / (1.0 - theta);
    const double a_ref = ch.healthy_negative_rate(d);
    const double solo = ch.solo_positive_rate(d);
    c.c1 = bound_ratio(t, d * kl_bernoulli(alpha, ch.q));
    c.c2 = bound_ratio(1.0, d * kl_bernoulli(alpha, a_ref));
    c.c3 = bound_ratio(t, d * kl_bernoulli(beta, solo));
    const ZSolve zs = minimize_stage2_exponent(alpha, beta, ch.healthy_positive_rate(d),
                                               ch.false_positive_share(d), zopt);
    c.c4 = bound_ratio(1.0 / (1.0 - theta), d * zs.exponent);
    c.z_star = zs.z;
    return c;
}

}  // namespace detail

// Error exponents of the four DD failure modes.  c1: infected item washed out
// in stage 1; c2: too few tests stay displayed-negative-pure; c3: infected
// item short of solo positives in stage 2; c4: healthy stage-1 survivor
// collecting enough solo positives, maximized over the displayed-positive
// share z of its tests.
inline DdConstants dd_constants(double alpha, double beta, double d, double theta,
                                const ChannelParams& ch) {
    if (!(theta > 0.0 && theta < 1.0)) throw std::domain_error("dd_constants: theta must lie in (0,1)");
    if (!(d > 0.0)) throw std::domain_error("dd_constants: d must be positive");
    const double a_ref = ch.healthy_negative_rate(d);
    if (!(alpha >= ch.q && alpha <= a_ref))
        throw std::domain_error("dd_constants: alpha outside [q, e^{-d}(1-p)+(1-e^{-d})q]");
    if (!(beta >= 0.0 && beta <= ch.solo_positive_rate(d)))
        throw std::domain_error("dd_constants: beta outside [0, e^{-d}(1-q)]");
    return detail::dd_eval(alpha, beta, d, theta, ch, detail::ZOptions{});
}

// ---------------------------------------------------------------------------
// Bernoulli designs.  Same failure events, but the per-item divergence is
// k KL(x d/k || y d/k); pass k_limit = inf for its limit d (x log(x/y) + y - x).

inline double bernoulli_divergence(double x, double y, double d, double k_limit) {
    if (std::isinf(k_limit)) return d * kl_poisson_rate(x, y);
    return scaled_kl(x, y, d, k_limit);
}

inline CompConstants bernoulli_comp_constants(double alpha, double d, double theta,
                                              const ChannelParams& ch, double k_limit = inf) {
    if (!(theta > 0.0 && theta < 1.0))
        throw std::domain_error("bernoulli_comp_constants: theta must lie in (0,1)");
    if (!(d > 0.0)) throw std::domain_error("bernoulli_comp_constants: d must be positive");
    const double a_ref = ch.healthy_negative_rate(d);
    if (!(alpha >= ch.q && alpha <= a_ref))
        throw std::domain_error("bernoulli_comp_constants: alpha outside [q, e^{-d}(1-p)+(1-e^{-d})q]");
    const double t = theta / (1.0 - theta);
    return {detail::bound_ratio(t, bernoulli_divergence(alpha, ch.q, d, k_limit)),
            detail::bound_ratio(1.0 / (1.0 - theta), bernoulli_divergence(alpha, a_ref, d, k_limit))};
}

// zeta splits the healthy stage-1 survivors between the "too few pure tests"
// and "enough solo flips" events; c2 carries (1-zeta) and c4 carries zeta.
inline DdConstants bernoulli_dd_constants(double alpha, double beta, double d, double theta,
                                          double zeta, const ChannelParams& ch,
                                          double k_limit = inf) {
    if (!(theta > 0.0 && theta < 1.0))
        throw std::domain_error("bernoulli_dd_constants: theta must lie in (0,1)");
    if (!(d > 0.0)) throw std::domain_error("bernoulli_dd_constants: d must be positive");
    if (!(zeta > 0.0 && zeta < theta))
        throw std::domain_error("bernoulli_dd_constants: zeta must lie in (0,theta)");
    const double a_ref = ch.healthy_negative_rate(d);
    const double solo = ch.solo_positive_rate(d);
    const double flip = std::exp(-d) * ch.p;
    if (!(alpha >= ch.q && alpha <= a_ref))
        throw std::domain_error("bernoulli_dd_constants: alpha outside [q, e^{-d}(1-p)+(1-e^{-d})q]");
    if (!(beta >= flip && beta <= solo))
        throw std::domain_error("bernoulli_dd_constants: beta outside [e^{-d}p, e^{-d}(1-q)]");
    DdConstants c;
    const double t = theta / (1.0 - theta);
    c.c1 = detail::bound_ratio(t, bernoulli_divergence(alpha, ch.q, d, k_limit));
    c.c2 = detail::bound_ratio((1.0 - zeta) / (1.0 - theta),
                               bernoulli_divergence(alpha, a_ref, d, k_limit));
    c.c3 = detail::bound_ratio(t, bernoulli_divergence(beta, solo, d, k_limit));
    c.c4 = detail::bound_ratio(zeta / (1.0 - theta), bernoulli_divergence(beta, flip, d, k_limit));
    return c;
}

// ---------------------------------------------------------------------------
// Converse

inline BoundResult converse_constant(const ChannelParams& ch) {
    const CapacityResult cap = channel_capacity(ch);
    BoundResult res;
    res.prefactor_c = 1.0 / cap.capacity_nats;
    res.d_star = cap.d_heuristic;
    res.binding_constraint = "converse";
    res.rate_bits = cap.capacity_bits();
    return res;
}

// ---------------------------------------------------------------------------
// Optimizers

namespace detail {

struct Interval {
    double lo = 0.0, hi = 0.0;
    bool ok() const { return hi > lo; }
    double clamp(double x) const { return std::min(hi, std::max(lo, x)); }
    double mid() const { return 0.5 * (lo + hi); }
};

inline Interval inset_interval(double lo, double hi) {
    const double inset = (hi - lo) * interval_inset;
    return {lo + inset, hi - inset};
}

[[noreturn]] inline void optimization_failed() {
    throw std::runtime_error("optimization failed: objective is infinite on the entire feasible set");
}

struct OuterSolve {
    double d = 0.0;
    double value = inf;
};

// Shared outer loop: scan the log-spaced d grid, refine the best local
// minima by golden section, return the best (d, value).
template <class ValueAtD>
OuterSolve minimize_over_d(ValueAtD&& value_at_d, const OptimizerOptions& opt) {
    const std::vector<double> grid = log_grid(opt.d_min, opt.d_max, opt.d_points);
    std::vector<double> scan(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) scan[i] = value_at_d(grid[i], false);
    const std::vector<int> minima = local_minima(scan, 2);
    if (minima.empty()) optimization_failed();
    OuterSolve best;
    for (int mi : minima) {
        const double lo = grid[static_cast<std::size_t>(std::max(0, mi - 1))];
        const double hi = grid[static_cast<std::size_t>(
            std::min(static_cast<int>(grid.size()) - 1, mi + 1))];
        LinePoint ref = golden_section([&](double d) { return value_at_d(d, true); }, lo, hi,
                                       (hi - lo) * 1e-8);
        if (ref.value < best.value) best = {ref.x, ref.value};
        const double g = scan[static_cast<std::size_t>(mi)];
        if (g < best.value) best = {grid[static_cast<std::size_t>(mi)], g};
    }
    if (!std::isfinite(best.value)) optimization_failed();
    return best;
}

using BoxCoords = std::array<double, 3>;

struct BoxPoint {
    BoxCoords x{};
    double value = inf;
};

// Nelder-Mead over the unit cube (probes clamped into it).  The DD objectives
// need it as a finisher: coordinate descent stalls where two constraint
// surfaces cross, because along the crossing ridge no single-coordinate move
// improves while a diagonal one does, and the simplex supplies the diagonal.
template <class F>
BoxPoint nelder_mead_box(F&& f, const BoxCoords& start, double step, int max_iter) {
    auto clamp01 = [](BoxCoords p) {
        for (double& c : p) c = std::min(1.0, std::max(0.0, c));
        return p;
    };
    std::array<BoxPoint, 4> s;
    s[0].x = clamp01(start);
    s[0].value = f(s[0].x);
    for (std::size_t i = 0; i < 3; ++i) {
        BoxCoords p = s[0].x;
        p[i] += (p[i] + step <= 1.0) ? step : -step;
        s[i + 1] = {p, f(p)};
    }
    auto order = [&] {
        std::sort(s.begin(), s.end(),
                  [](const BoxPoint& a, const BoxPoint& b) { return a.value < b.value; });
    };
    order();
    for (int it = 0; it < max_iter; ++it) {
        if (s[3].value - s[0].value <= 1e-12 * (std::abs(s[0].value) + 1e-300)) break;
        BoxCoords cen{};
        for (std::size_t i = 0; i < 3; ++i) cen[i] = (s[0].x[i] + s[1].x[i] + s[2].x[i]) / 3.0;
        auto probe = [&](double coef) {
            BoxCoords p;
            for (std::size_t i = 0; i < 3; ++i) p[i] = cen[i] + coef * (cen[i] - s[3].x[i]);
            return clamp01(p);
        };
        const BoxCoords xr = probe(1.0);
        const double fr = f(xr);
        if (fr < s[0].value) {
            const BoxCoords xe = probe(2.0);
            const double fe = f(xe);
            s[3] = fe < fr ? BoxPoint{xe, fe} : BoxPoint{xr, fr};
        } else if (fr < s[2].value) {
            s[3] = {xr, fr};
        } else {
            const bool outside = fr < s[3].value;
            const BoxCoords xc = probe(outside ? 0.5 : -0.5);
            const double fc = f(xc);
            if (fc < (outside ? fr : s[3].value)) {
                s[3] = {xc, fc};
            } else {
                for (std::size_t i = 1; i < 4; ++i) {
                    BoxCoords p;
                    for (std::size_t j = 0; j < 3; ++j)
                        p[j] = s[0].x[j] + 0.5 * (s[i].x[j] - s[0].x[j]);
                    s[i] = {p, f(p)};
                }
            }
        }
        order();
    }
    return s[0];
}

}  // namespace detail

// Minimize max{b1, b2} over (alpha, d).  Works for both designs: the only
// difference is the divergence, so the caller passes it in.
namespace detail {

template <class Div>
BoundResult optimize_comp_core(const BoundQuery& query, const OptimizerOptions& opt, Div&& div) {
    query.validate();
    const ChannelParams& ch = query.channel;
    const double t = query.theta / (1.0 - query.theta);
    const double u = 1.0 / (1.0 - query.theta);

    struct AlphaSolve {
        double alpha = 0.0;
        double value = inf;
    };
    auto solve_alpha = [&](double d, bool fine) -> AlphaSolve {
        const Interval iv = inset_interval(ch.q, ch.healthy_negative_rate(d));
        if (!iv.ok()) return {};
        auto f = [&](double a) {
            return std::max(bound_ratio(t, div(a, ch.q, d)),
                            bound_ratio(u, div(a, ch.healthy_negative_rate(d), d)));
        };
        const int pts = fine ? opt.line_points : opt.coarse_line_points;
        LinePoint lp = line_minimum(f, iv.lo, iv.hi, pts, (iv.hi - iv.lo) * 1e-10);
        return {lp.x, lp.value};
    };

    auto value_at_d = [&](double d, bool fine) { return solve_alpha(d, fine).value; };
    const auto outer = minimize_over_d(value_at_d, opt);
    const AlphaSolve as = solve_alpha(outer.d, true);

    BoundResult res;
    res.prefactor_c = as.value;
    res.alpha_star = as.alpha;
    res.d_star = outer.d;
    const double b1 = bound_ratio(t, div(as.alpha, ch.q, outer.d));
    res.binding_constraint = (b1 >= as.value) ? "b1" : "b2";
    res.rate_bits = 1.0 / (res.prefactor_c * std::log(2.0));
    return res;
}

}  // namespace detail

inline BoundResult optimize_comp(const BoundQuery& query, const OptimizerOptions& opt = {}) {
    return detail::optimize_comp_core(query, opt, [](double x, double y, double d) {
        return d * kl_bernoulli(x, y);
    });
}

inline BoundResult optimize_bernoulli_comp(const BoundQuery& query, const OptimizerOptions& opt = {},
                                           double k_limit = inf) {
    return detail::optimize_comp_core(query, opt, [k_limit](double x, double y, double d) {
        const double scale = d / k_limit;
        if (!std::isinf(k_limit) && (x * scale > 1.0 || y * scale > 1.0)) return inf;
        return bernoulli_divergence(x, y, d, k_limit);
    });
}

// Minimize max{c1..c4} over (alpha, beta, d): coordinate descent seeded from
// the d multistart grid, then a simplex finisher.  The slice-restricted lines
// are reliable because each retained constant is monotone along its slice
// (c1 falls and c2, c4 rise in alpha; c3 rises and c4 falls in beta).
inline BoundResult optimize_dd(const BoundQuery& query, const OptimizerOptions& opt = {}) {
    query.validate();
    const ChannelParams& ch = query.channel;
    const detail::ZOptions z_coarse{17, 1e-6};
    const detail::ZOptions z_fine{33, 1e-9};

    auto eval = [&](double alpha, double beta, double d, const detail::ZOptions& zopt) {
        return detail::dd_eval(alpha, beta, d, query.theta, ch, zopt).value();
    };

    struct Warm {
        double alpha = -1.0, beta = -1.0;
    };

    // Each line search minimizes only the constants that vary along its
    // slice (alpha: c1, c2, c4; beta: c3, c4).  Including a slice-constant
    // term would flatten the line wherever that term dominates and leave the
    // other coordinate pinned against it; dropping it is a tie-break that
    // cannot raise the full objective.
    auto descend = [&](double d, Warm& w, int rounds, int pts, const detail::ZOptions& zopt) {
        const detail::Interval ia = detail::inset_interval(ch.q, ch.healthy_negative_rate(d));
        const detail::Interval ib = detail::inset_interval(0.0, ch.solo_positive_rate(d));
        if (!ia.ok() || !ib.ok()) return inf;
        double alpha = (w.alpha < 0) ? ia.mid() : ia.clamp(w.alpha);
        double beta = (w.beta < 0) ? ib.mid() : ib.clamp(w.beta);
        double value = inf;
        for (int r = 0; r < rounds; ++r) {
            auto fa = [&](double a) {
                const DdConstants c = detail::dd_eval(a, beta, d, query.theta, ch, zopt);
                return std::max(std::max(c.c1, c.c2), c.c4);
            };
            alpha = detail::line_minimum(fa, ia.lo, ia.hi, pts, (ia.hi - ia.lo) * 1e-10).x;
            auto fb = [&](double b) {
                const DdConstants c = detail::dd_eval(alpha, b, d, query.theta, ch, zopt);
                return std::max(c.c3, c.c4);
            };
            beta = detail::line_minimum(fb, ib.lo, ib.hi, pts, (ib.hi - ib.lo) * 1e-10).x;
            const double full = eval(alpha, beta, d, zopt);
            if (value - full < opt.rel_tol * std::abs(value) && r > 0) {
                value = full;
                break;
            }
            value = full;
        }
        w = {alpha, beta};
        return value;
    };

    auto value_at_d = [&](double d, bool fine) {
        Warm w;  // fresh start per d so scan values do not depend on visit order
        return descend(d, w, fine ? 4 : 2, fine ? 64 : opt.coarse_line_points,
                       fine ? z_fine : z_coarse);
    };

    const auto outer = detail::minimize_over_d(value_at_d, opt);

    // Full-resolution coordinate descent at the best d, then the simplex
    // finisher over (alpha, beta, d) in normalized box coordinates.
    double d_best = outer.d;
    Warm w;
    double value = descend(d_best, w, 6, opt.line_points, z_fine);
    const double d_lo = std::max(opt.d_min, d_best * 0.8);
    const double d_hi = std::min(opt.d_max, d_best * 1.25);
    if (d_hi > d_lo && std::isfinite(value)) {
        auto boxed = [&](const detail::BoxCoords& s) {
            const double d = d_lo + s[2] * (d_hi - d_lo);
            const detail::Interval ia = detail::inset_interval(ch.q, ch.healthy_negative_rate(d));
            const detail::Interval ib = detail::inset_interval(0.0, ch.solo_positive_rate(d));
            if (!ia.ok() || !ib.ok()) return detail::BoxCoords{0.0, 0.0, d};
            return detail::BoxCoords{ia.lo + s[0] * (ia.hi - ia.lo),
                                     ib.lo + s[1] * (ib.hi - ib.lo), d};
        };
        auto box_f = [&](const detail::BoxCoords& s) {
            const detail::BoxCoords p = boxed(s);
            return eval(p[0], p[1], p[2], z_fine);
        };
        const detail::Interval ia = detail::inset_interval(ch.q, ch.healthy_negative_rate(d_best));
        const detail::Interval ib = detail::inset_interval(0.0, ch.solo_positive_rate(d_best));
        const detail::BoxCoords s0{(w.alpha - ia.lo) / (ia.hi - ia.lo),
                                   (w.beta - ib.lo) / (ib.hi - ib.lo),
                                   (d_best - d_lo) / (d_hi - d_lo)};
        detail::BoxPoint bp = detail::nelder_mead_box(box_f, s0, 0.05, 500);
        bp = detail::nelder_mead_box(box_f, bp.x, 0.01, 500);
        if (bp.value < value) {
            const detail::BoxCoords p = boxed(bp.x);
            w = {p[0], p[1]};
            d_best = p[2];
            value = bp.value;
        }
    }
    if (!std::isfinite(value)) detail::optimization_failed();

    const DdConstants fin = detail::dd_eval(w.alpha, w.beta, d_best, query.theta, ch, z_fine);
    BoundResult res;
    res.prefactor_c = fin.value();
    res.alpha_star = w.alpha;
    res.beta_star = w.beta;
    res.d_star = d_best;
    res.z_star = fin.z_star;
    res.binding_constraint = fin.binding();
    res.rate_bits = 1.0 / (res.prefactor_c * std::log(2.0));
    return res;
}

// Bernoulli DD: coordinates (alpha, beta, d); zeta has a closed-form inner
// solution because max{(1-zeta) a, zeta b} is piecewise monotone with a
// single crossing at zeta = a/(a+b), clamped to the working range
// [theta/100, theta (1 - 1e-3)].
inline BoundResult optimize_bernoulli_dd(const BoundQuery& query, const OptimizerOptions& opt = {},
                                         double k_limit = inf) {
    query.validate();
    const ChannelParams& ch = query.channel;
    const double t = query.theta / (1.0 - query.theta);
    const double u = 1.0 / (1.0 - query.theta);
    const double zeta_lo = query.theta / 100.0;
    const double zeta_hi = query.theta * (1.0 - 1e-3);

    auto div = [k_limit](double x, double y, double d) {
        const double scale = d / k_limit;
        if (!std::isinf(k_limit) && (x * scale > 1.0 || y * scale > 1.0)) return inf;
        return bernoulli_divergence(x, y, d, k_limit);
    };

    struct Eval {
        double value = inf;
        double zeta = 0.0;
        double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
    };
    auto eval = [&](double alpha, double beta, double d) -> Eval {
        Eval e;
        e.c1 = detail::bound_ratio(t, div(alpha, ch.q, d));
        e.c3 = detail::bound_ratio(t, div(beta, ch.solo_positive_rate(d), d));
        const double a = detail::bound_ratio(u, div(alpha, ch.healthy_negative_rate(d), d));
        const double b = detail::bound_ratio(u, div(beta, std::exp(-d) * ch.p, d));
        double zeta;
        if (std::isinf(a) || std::isinf(b)) {
            zeta = std::isinf(a) ? zeta_hi : zeta_lo;  // infeasible either way; keep zeta defined
        } else if (a + b == 0.0) {
            zeta = zeta_lo;
        } else {
            zeta = std::min(zeta_hi, std::max(zeta_lo, a / (a + b)));
        }
        e.zeta = zeta;
        e.c2 = (1.0 - zeta) * a;
        e.c4 = zeta * b;
        e.value = std::max(std::max(e.c1, e.c2), std::max(e.c3, e.c4));
        return e;
    };

    struct Warm {
        double alpha = -1.0, beta = -1.0;
    };

    // Same slice-restricted lines as the constant-column descent: alpha
    // moves c1, c2, c4 (the last two through zeta) and beta moves c2, c3,
    // c4; the slice-constant term is dropped so a dominating flat ceiling
    // cannot pin the coordinate.
    auto descend = [&](double d, Warm& w, int rounds, int pts) {
        const detail::Interval ia = detail::inset_interval(ch.q, ch.healthy_negative_rate(d));
        const detail::Interval ib =
            detail::inset_interval(std::exp(-d) * ch.p, ch.solo_positive_rate(d));
        if (!ia.ok() || !ib.ok()) return inf;
        double alpha = (w.alpha < 0) ? ia.mid() : ia.clamp(w.alpha);
        double beta = (w.beta < 0) ? ib.mid() : ib.clamp(w.beta);
        double value = inf;
        for (int r = 0; r < rounds; ++r) {
            auto fa = [&](double a) {
                const Eval e = eval(a, beta, d);
                return std::max(std::max(e.c1, e.c2), e.c4);
            };
            alpha = detail::line_minimum(fa, ia.lo, ia.hi, pts, (ia.hi - ia.lo) * 1e-10).x;
            auto fb = [&](double b) {
                const Eval e = eval(alpha, b, d);
                return std::max(std::max(e.c2, e.c3), e.c4);
            };
            beta = detail::line_minimum(fb, ib.lo, ib.hi, pts, (ib.hi - ib.lo) * 1e-10).x;
            const double full = eval(alpha, beta, d).value;
            if (value - full < opt.rel_tol * std::abs(value) && r > 0) {
                value = full;
                break;
            }
            value = full;
        }
        w = {alpha, beta};
        return value;
    };

    auto value_at_d = [&](double d, bool fine) {
        Warm w;  // fresh start per d so scan values do not depend on visit order
        return descend(d, w, fine ? 4 : 2, fine ? 64 : opt.coarse_line_points);
    };

    const auto outer = detail::minimize_over_d(value_at_d, opt);

    double d_best = outer.d;
    Warm w;
    double value = descend(d_best, w, 6, opt.line_points);
    const double d_lo = std::max(opt.d_min, d_best * 0.8);
    const double d_hi = std::min(opt.d_max, d_best * 1.25);
    if (d_hi > d_lo && std::isfinite(value)) {
        auto boxed = [&](const detail::BoxCoords& s) {
            const double d = d_lo + s[2] * (d_hi - d_lo);
            const detail::Interval ia = detail::inset_interval(ch.q, ch.healthy_negative_rate(d));
            const detail::Interval ib =
                detail::inset_interval(std::exp(-d) * ch.p, ch.solo_positive_rate(d));
            if (!ia.ok() || !ib.ok()) return detail::BoxCoords{0.0, 0.0, d};
            return detail::BoxCoords{ia.lo + s[0] * (ia.hi - ia.lo),
                                     ib.lo + s[1] * (ib.hi - ib.lo), d};
        };
        auto box_f = [&](const detail::BoxCoords& s) {
            const detail::BoxCoords p = boxed(s);
            return eval(p[0], p[1], p[2]).value;
        };
        const detail::Interval ia = detail::inset_interval(ch.q, ch.healthy_negative_rate(d_best));
        const detail::Interval ib =
            detail::inset_interval(std::exp(-d_best) * ch.p, ch.solo_positive_rate(d_best));
        const detail::BoxCoords s0{(w.alpha - ia.lo) / (ia.hi - ia.lo),
                                   (w.beta - ib.lo) / (ib.hi - ib.lo),
                                   (d_best - d_lo) / (d_hi - d_lo)};
        detail::BoxPoint bp = detail::nelder_mead_box(box_f, s0, 0.05, 500);
        bp = detail::nelder_mead_box(box_f, bp.x, 0.01, 500);
        if (bp.value < value) {
            const detail::BoxCoords p = boxed(bp.x);
            w = {p[0], p[1]};
            d_best = p[2];
            value = bp.value;
        }
    }
    if (!std::isfinite(value)) detail::optimization_failed();

    const Eval fin = eval(w.alpha, w.beta, d_best);
    BoundResult res;
    res.prefactor_c = fin.value;
    res.alpha_star = w.alpha;
    res.beta_star = w.beta;
    res.d_star = d_best;
    res.zeta_star = fin.zeta;
    const double v = fin.value;
    res.binding_constraint = (fin.c1 == v)   ? "c1"
                             : (fin.c2 == v) ? "c2"
                             : (fin.c3 == v) ? "c3"
                                             : "c4";
    res.rate_bits = 1.0 / (res.prefactor_c * std::log(2.0));
    return res;
}

inline BoundResult optimize_bound(const BoundQuery& query, const OptimizerOptions& opt = {}) {
    if (query.algorithm == Algorithm::Converse) return converse_constant(query.channel);
    if (query.algorithm == Algorithm::Comp)
        return query.design == DesignKind::ConstantColumn ? optimize_comp(query, opt)
                                                          : optimize_bernoulli_comp(query, opt);
    return query.design == DesignKind::ConstantColumn ? optimize_dd(query, opt)
                                                      : optimize_bernoulli_dd(query, opt);
}

struct SweepRow {
    double theta = 0.0;
    std::optional<BoundResult> result;
    std::string error;
};

inline std::vector<SweepRow> rate_sweep(BoundQuery query, const std::vector<double>& theta_grid,
                                        const OptimizerOptions& opt = {}) {
    std::vector<SweepRow> rows;
    rows.reserve(theta_grid.size());
    for (double theta : theta_grid) {
        SweepRow row;
        row.theta = theta;
        query.theta = theta;
        try {
            row.result = optimize_bound(query, opt);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace noisygt
