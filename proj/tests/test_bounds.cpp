#include <catch2/catch_amalgamated.hpp>

#include "noisygt/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace noisygt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

BoundQuery make_query(double theta, double p, double q, DesignKind dk, Algorithm alg) {
    BoundQuery query;
    query.theta = theta;
    query.channel = ChannelParams(p, q);
    query.design = dk;
    query.algorithm = alg;
    return query;
}

BoundResult solve(double theta, double p, double q, DesignKind dk, Algorithm alg) {
    return optimize_bound(make_query(theta, p, q, dk, alg));
}

constexpr double log2sq = 0.48045301391820142;  // log^2 2

}  // namespace

// ---------------------------------------------------------------------------
// constant evaluation

TEST_CASE("COMP constants at hand-checked points") {
    // at theta = 0.5 the mass-coefficients are t = 1 and u = 2
    const ChannelParams z(0.0, 0.02);
    const CompConstants c = comp_constants(0.1, 1.0, 0.5, z);
    CHECK_THAT(c.b1, WithinRel(1.0 / 0.08430176373713387, 1e-12));  // 1 / KL(0.1 || 0.02)
    CHECK_THAT(c.b2, WithinRel(2.0 / kl_bernoulli(0.1, z.healthy_negative_rate(1.0)), 1e-12));
    CHECK(std::string(c.binding()) == (c.b1 >= c.b2 ? "b1" : "b2"));

    // alpha at the q endpoint: the washed-out-infected exponent vanishes
    CHECK(comp_constants(0.02, 1.0, 0.5, z).b1 == inf);

    // noiseless, alpha = 0 exactly: threshold-1 decoding, b1 drops out
    const ChannelParams clean(0.0, 0.0);
    const CompConstants c0 = comp_constants(0.0, std::log(2.0), 0.5, clean);
    CHECK(c0.b1 == inf);  // 0/0 ratio at the deleted endpoint resolves to +inf
    CHECK_THAT(c0.b2, WithinRel(2.0 / log2sq, 1e-13));
    // a hair inside the interval b1 collapses to 0 and b2 is continuous
    const CompConstants ceps = comp_constants(1e-9, std::log(2.0), 0.5, clean);
    CHECK(ceps.b1 == 0.0);  // KL(alpha || 0) = inf for alpha > 0
    CHECK_THAT(ceps.b2, WithinRel(2.0 / log2sq, 1e-6));

    CHECK_THROWS_AS(comp_constants(0.1, 1.0, 0.0, z), std::domain_error);
    CHECK_THROWS_AS(comp_constants(0.1, 0.0, 0.5, z), std::domain_error);
    CHECK_THROWS_AS(comp_constants(0.9, 1.0, 0.5, z), std::domain_error);  // above A(d)
    CHECK_THROWS_AS(comp_constants(0.01, 1.0, 0.5, z), std::domain_error);  // below q
}

TEST_CASE("DD constants: no false-positive mass when p = 0") {
    const ChannelParams z(0.0, 0.1);
    const DdConstants c = dd_constants(0.2, 0.1, 0.7, 0.5, z);
    CHECK(c.c4 == 0.0);
    CHECK_FALSE(c.z_star.has_value());
    CHECK(c.c1 > 0.0);
    CHECK(c.c2 > 0.0);
    CHECK(c.c3 > 0.0);
}

TEST_CASE("DD constants reach the noiseless closed form as thresholds vanish") {
    const ChannelParams clean(0.0, 0.0);
    const double d = std::log(2.0);
    const DdConstants c = dd_constants(1e-9, 1e-9, d, 0.5, clean);
    CHECK_THAT(c.value(), WithinRel(1.0 / log2sq, 1e-6));
    CHECK(c.c4 == 0.0);
}

TEST_CASE("DD stage-2 exponent pins z = 1 when q = 0") {
    // with q = 0 a surviving healthy item needs every test displayed
    // positive, so the inner minimum sits at the upper z endpoint and the
    // exponent reduces to -log w + KL(beta || r)
    const ChannelParams rz(0.05, 0.0);
    const double d = 1.0, theta = 0.5, alpha = 1e-12, beta = 0.2;
    const DdConstants c = dd_constants(alpha, beta, d, theta, rz);
    const double w = rz.healthy_positive_rate(d);
    const double r = rz.false_positive_share(d);
    const double expo = kl_bernoulli(1.0, w) + kl_bernoulli(beta, r);  // z = 1 reduced form
    const double expected = (1.0 / (1.0 - theta)) / (d * expo);
    REQUIRE(c.z_star.has_value());
    CHECK_THAT(*c.z_star, WithinAbs(1.0, 1e-9));
    CHECK_THAT(c.c4, WithinRel(expected, 1e-6));
}

TEST_CASE("DD stage-2 minimizer beats a uniform z scan") {
    const ChannelParams ch(0.1, 0.1);
    for (double d : {0.4, 0.8}) {
        for (double alpha : {0.15, 0.3}) {
            for (double beta : {0.1, 0.2}) {
                const DdConstants c = dd_constants(alpha, beta, d, 0.6, ch);
                const double w = ch.healthy_positive_rate(d);
                const double r = ch.false_positive_share(d);
                double best = inf;
                for (int i = 0; i < 64; ++i) {
                    const double z = (1.0 - alpha) + alpha * i / 63.0;
                    double expo = kl_bernoulli(z, w);
                    if (beta > z * r) expo = (beta > z) ? inf : expo + z * kl_bernoulli(beta / z, r);
                    best = std::min(best, expo);
                }
                const double c4_scan = (1.0 / (1.0 - 0.6)) / (d * best);
                CHECK(c.c4 >= c4_scan * (1.0 - 1e-9));
            }
        }
    }
}

TEST_CASE("Bernoulli constants approach the limit divergence from below") {
    const ChannelParams ch(0.1, 0.1);
    const CompConstants lim = bernoulli_comp_constants(0.3, 1.0, 0.5, ch);
    for (double k : {1e2, 1e3, 1e4}) {
        const CompConstants fin = bernoulli_comp_constants(0.3, 1.0, 0.5, ch, k);
        // the finite-k divergence exceeds its limit, so the constants shrink
        CHECK(fin.b1 <= lim.b1 * (1.0 + 1e-12));
        CHECK(fin.b2 <= lim.b2 * (1.0 + 1e-12));
        CHECK_THAT(fin.b1, WithinRel(lim.b1, 20.0 / k));
    }
}

TEST_CASE("Bernoulli DD constants assemble the zeta split") {
    const ChannelParams ch(0.1, 0.1);
    const double alpha = 0.25, beta = 0.17, d = 0.7, theta = 0.5, zeta = 0.3;
    const DdConstants c = bernoulli_dd_constants(alpha, beta, d, theta, zeta, ch);
    const double t = theta / (1.0 - theta), u = 1.0 / (1.0 - theta);
    CHECK_THAT(c.c1, WithinRel(t / bernoulli_divergence(alpha, ch.q, d, inf), 1e-12));
    CHECK_THAT(c.c2, WithinRel((1.0 - zeta) * u /
                                   bernoulli_divergence(alpha, ch.healthy_negative_rate(d), d, inf),
                               1e-12));
    CHECK_THAT(c.c3,
               WithinRel(t / bernoulli_divergence(beta, ch.solo_positive_rate(d), d, inf), 1e-12));
    CHECK_THAT(c.c4, WithinRel(zeta * u /
                                   bernoulli_divergence(beta, std::exp(-d) * ch.p, d, inf),
                               1e-12));
    CHECK_THROWS_AS(bernoulli_dd_constants(alpha, beta, d, theta, 0.6, ch), std::domain_error);
    CHECK_THROWS_AS(bernoulli_dd_constants(alpha, 0.01, d, theta, zeta, ch),
                    std::domain_error);  // beta below e^{-d} p
}

// ---------------------------------------------------------------------------
// optimized prefactors against independently computed references (50-digit
// grid + polish oracle, trusted to ~1e-9 relative)

TEST_CASE("optimized COMP prefactors, constant-column") {
    CHECK_THAT(solve(0.5, 0.1, 0.1, DesignKind::ConstantColumn, Algorithm::Comp).prefactor_c,
               WithinRel(18.6943471836, 1e-5));
    CHECK_THAT(solve(0.3, 0.1, 0.1, DesignKind::ConstantColumn, Algorithm::Comp).prefactor_c,
               WithinRel(11.2223114077, 1e-5));
    CHECK_THAT(solve(0.5, 0.0, 0.02, DesignKind::ConstantColumn, Algorithm::Comp).prefactor_c,
               WithinRel(9.2628552980, 1e-5));
    CHECK_THAT(solve(0.7, 0.0, 0.1, DesignKind::ConstantColumn, Algorithm::Comp).prefactor_c,
               WithinRel(28.3236948758, 1e-5));
    CHECK_THAT(solve(0.5, 0.05, 0.0, DesignKind::ConstantColumn, Algorithm::Comp).prefactor_c,
               WithinRel(4.47545075647769, 1e-5));
    CHECK_THAT(solve(0.3, 0.05, 0.0, DesignKind::ConstantColumn, Algorithm::Comp).prefactor_c,
               WithinRel(3.1967505403412, 1e-5));

    const BoundResult sym = solve(0.5, 0.1, 0.1, DesignKind::ConstantColumn, Algorithm::Comp);
    REQUIRE(sym.alpha_star.has_value());
    CHECK_THAT(*sym.alpha_star, WithinRel(0.25706518, 1e-3));
    CHECK_THAT(sym.d_star, WithinRel(0.533716472, 1e-3));
    CHECK_THAT(sym.rate_bits, WithinRel(1.0 / (sym.prefactor_c * std::log(2.0)), 1e-12));
    CHECK(*sym.alpha_star > 0.1);
    CHECK(*sym.alpha_star < ChannelParams(0.1, 0.1).healthy_negative_rate(sym.d_star));
}

TEST_CASE("optimized DD prefactors, constant-column") {
    CHECK_THAT(solve(0.5, 0.1, 0.1, DesignKind::ConstantColumn, Algorithm::Dd).prefactor_c,
               WithinRel(12.7469704361, 1e-5));
    CHECK_THAT(solve(0.3, 0.1, 0.1, DesignKind::ConstantColumn, Algorithm::Dd).prefactor_c,
               WithinRel(8.8405220480, 1e-5));
    CHECK_THAT(solve(0.7, 0.1, 0.1, DesignKind::ConstantColumn, Algorithm::Dd).prefactor_c,
               WithinRel(25.1709045451, 1e-5));
    CHECK_THAT(solve(0.5, 0.0, 0.1, DesignKind::ConstantColumn, Algorithm::Dd).prefactor_c,
               WithinRel(9.9369889667, 1e-5));
    CHECK_THAT(solve(0.5, 0.0, 0.02, DesignKind::ConstantColumn, Algorithm::Dd).prefactor_c,
               WithinRel(5.9362165113, 1e-5));
    CHECK_THAT(solve(0.3, 0.0, 0.05, DesignKind::ConstantColumn, Algorithm::Dd).prefactor_c,
               WithinRel(5.5114001664, 1e-5));
    CHECK_THAT(solve(0.5, 0.05, 0.0, DesignKind::ConstantColumn, Algorithm::Dd).prefactor_c,
               WithinRel(4.23449638069251, 1e-5));

    const BoundResult sym = solve(0.5, 0.1, 0.1, DesignKind::ConstantColumn, Algorithm::Dd);
    REQUIRE(sym.alpha_star.has_value());
    REQUIRE(sym.beta_star.has_value());
    CHECK_THAT(*sym.alpha_star, WithinRel(0.27120038, 1e-3));
    CHECK_THAT(*sym.beta_star, WithinRel(0.22694817, 1e-3));
    CHECK_THAT(sym.d_star, WithinRel(0.6716637, 1e-3));

    // reverse-Z: optimum sits at the alpha -> 0 edge with z pinned at 1
    const BoundResult rz = solve(0.5, 0.05, 0.0, DesignKind::ConstantColumn, Algorithm::Dd);
    REQUIRE(rz.alpha_star.has_value());
    CHECK(*rz.alpha_star < 1e-6);
    CHECK_THAT(rz.d_star, WithinRel(0.762896846241, 1e-2));
}

TEST_CASE("optimized prefactors, Bernoulli design") {
    CHECK_THAT(solve(0.5, 0.1, 0.1, DesignKind::Bernoulli, Algorithm::Comp).prefactor_c,
               WithinRel(28.2894642187, 1e-5));
    CHECK_THAT(solve(0.5, 0.0, 0.02, DesignKind::Bernoulli, Algorithm::Comp).prefactor_c,
               WithinRel(12.9148161362, 1e-5));
    CHECK_THAT(solve(0.5, 0.1, 0.1, DesignKind::Bernoulli, Algorithm::Dd).prefactor_c,
               WithinRel(18.5681139879, 1e-5));
    CHECK_THAT(solve(0.5, 0.0, 0.1, DesignKind::Bernoulli, Algorithm::Dd).prefactor_c,
               WithinRel(15.6469875765, 1e-5));
    CHECK_THAT(solve(0.5, 0.05, 0.0, DesignKind::Bernoulli, Algorithm::Dd).prefactor_c,
               WithinRel(5.2118951634, 1e-5));

    // Bernoulli COMP at the reverse-Z channel has closed form e/((1-theta)(1-p)) at d* = 1
    const BoundResult rz = solve(0.5, 0.05, 0.0, DesignKind::Bernoulli, Algorithm::Comp);
    CHECK_THAT(rz.prefactor_c, WithinRel(std::exp(1.0) / (0.5 * 0.95), 1e-5));
    CHECK_THAT(rz.d_star, WithinRel(1.0, 1e-3));
    CHECK_THAT(solve(0.3, 0.05, 0.0, DesignKind::Bernoulli, Algorithm::Comp).prefactor_c,
               WithinRel(4.0876418473, 1e-5));
}

TEST_CASE("noiseless closed forms across theta") {
    for (double theta : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const double t = theta / (1.0 - theta);
        CHECK_THAT(solve(theta, 0.0, 0.0, DesignKind::ConstantColumn, Algorithm::Comp).prefactor_c,
                   WithinRel(1.0 / ((1.0 - theta) * log2sq), 1e-5));
        CHECK_THAT(solve(theta, 0.0, 0.0, DesignKind::ConstantColumn, Algorithm::Dd).prefactor_c,
                   WithinRel(std::max(1.0, t) / log2sq, 1e-5));
        CHECK_THAT(solve(theta, 0.0, 0.0, DesignKind::Bernoulli, Algorithm::Comp).prefactor_c,
                   WithinRel(std::exp(1.0) / (1.0 - theta), 1e-5));
        const BoundResult bd = solve(theta, 0.0, 0.0, DesignKind::Bernoulli, Algorithm::Dd);
        // zeta is capped at theta (1 - 1e-3), which inflates the noiseless
        // value by the same hair: c = max{1, 1.001 t, t} e at theta != 1/2
        const double expect = std::max(1.0 / (1.0 - theta) * (1.0 - theta * (1.0 - 1e-3)),
                                       t) * std::exp(1.0);
        CHECK_THAT(bd.prefactor_c, WithinRel(expect, 1e-4));
        CHECK_THAT(bd.d_star, WithinRel(1.0, 1e-3));
    }
    CHECK_THAT(solve(0.5, 0.0, 0.0, DesignKind::Bernoulli, Algorithm::Dd).prefactor_c,
               WithinRel(2.7210001103, 1e-5));  // 1.001 e
    CHECK_THAT(solve(0.7, 0.0, 0.0, DesignKind::Bernoulli, Algorithm::Dd).prefactor_c,
               WithinRel(6.342657599737772, 1e-5));  // (7/3) e
}

TEST_CASE("converse prefactor is the inverse capacity") {
    CHECK_THAT(solve(0.5, 0.1, 0.1, DesignKind::ConstantColumn, Algorithm::Converse).prefactor_c,
               WithinRel(2.7169172674869942, 1e-12));
    CHECK_THAT(solve(0.2, 0.0, 0.1, DesignKind::Bernoulli, Algorithm::Converse).prefactor_c,
               WithinRel(1.8911953158268334, 1e-12));
    CHECK_THAT(solve(0.5, 0.05, 0.0, DesignKind::ConstantColumn, Algorithm::Converse).prefactor_c,
               WithinRel(1.6831792577577798, 1e-12));
    const BoundResult c = solve(0.5, 0.2, 0.05, DesignKind::ConstantColumn, Algorithm::Converse);
    CHECK_THAT(c.prefactor_c, WithinRel(2.9974511179480685, 1e-12));
    CHECK(c.binding_constraint == "converse");
}

// ---------------------------------------------------------------------------
// independent brute-force cross-checks

TEST_CASE("COMP optimizer agrees with a brute-force grid") {
    const ChannelParams ch(0.0, 0.1);
    const double theta = 0.5;
    double grid_min = inf;
    for (int di = 0; di < 160; ++di) {
        const double d = 0.1 * std::pow(30.0, di / 159.0);  // log-spaced over [0.1, 3]
        const double a_hi = ch.healthy_negative_rate(d);
        for (int ai = 1; ai < 400; ++ai) {
            const double a = ch.q + (a_hi - ch.q) * ai / 400.0;
            grid_min = std::min(grid_min, comp_constants(a, d, theta, ch).value());
        }
    }
    const double opt = solve(theta, 0.0, 0.1, DesignKind::ConstantColumn, Algorithm::Comp).prefactor_c;
    CHECK(opt <= grid_min * (1.0 + 1e-6));
    CHECK(opt >= grid_min * (1.0 - 0.03));
}

TEST_CASE("DD optimizer agrees with a brute-force grid") {
    const ChannelParams ch(0.1, 0.1);
    const double theta = 0.5;
    double grid_min = inf;
    for (int di = 0; di < 40; ++di) {
        const double d = 0.3 * std::pow(4.0, di / 39.0);  // log-spaced over [0.3, 1.2]
        const double a_hi = ch.healthy_negative_rate(d);
        const double b_hi = ch.solo_positive_rate(d);
        for (int ai = 1; ai < 80; ++ai) {
            const double a = ch.q + (a_hi - ch.q) * ai / 80.0;
            for (int bi = 1; bi < 80; ++bi) {
                const double b = b_hi * bi / 80.0;
                grid_min = std::min(grid_min, dd_constants(a, b, d, theta, ch).value());
            }
        }
    }
    const double opt = solve(theta, 0.1, 0.1, DesignKind::ConstantColumn, Algorithm::Dd).prefactor_c;
    CHECK(opt <= grid_min * (1.0 + 1e-6));
    CHECK(opt >= grid_min * (1.0 - 0.03));
}

// ---------------------------------------------------------------------------
// structure of the optimized bounds

TEST_CASE("COMP prefactor grows with theta") {
    double prev = 0.0;
    for (double theta : {0.2, 0.4, 0.6, 0.8}) {
        const double c = solve(theta, 0.05, 0.05, DesignKind::ConstantColumn, Algorithm::Comp)
                             .prefactor_c;
        CHECK(c > prev);
        prev = c;
    }
}

TEST_CASE("bound ordering at a symmetric channel") {
    const double conv = solve(0.5, 0.1, 0.1, DesignKind::ConstantColumn, Algorithm::Converse)
                            .prefactor_c;
    const double dd = solve(0.5, 0.1, 0.1, DesignKind::ConstantColumn, Algorithm::Dd).prefactor_c;
    const double comp = solve(0.5, 0.1, 0.1, DesignKind::ConstantColumn, Algorithm::Comp)
                            .prefactor_c;
    const double bdd = solve(0.5, 0.1, 0.1, DesignKind::Bernoulli, Algorithm::Dd).prefactor_c;
    const double bcomp = solve(0.5, 0.1, 0.1, DesignKind::Bernoulli, Algorithm::Comp).prefactor_c;
    CHECK(conv < dd);
    CHECK(dd < comp);
    CHECK(dd < bdd);
    CHECK(comp < bcomp);
}

TEST_CASE("optimizing over a window honors its ends") {
    OptimizerOptions opt;
    opt.d_min = 1.5;
    opt.d_max = 2.5;
    const BoundResult r = optimize_comp(make_query(0.5, 0.0, 0.0, DesignKind::ConstantColumn,
                                                   Algorithm::Comp),
                                        opt);
    CHECK(r.d_star >= 1.5);
    CHECK(r.d_star <= 2.5);
    // optimum of the unconstrained problem is log 2 < 1.5, so the window binds
    CHECK_THAT(r.d_star, WithinRel(1.5, 1e-6));
}

TEST_CASE("rate_sweep emits closed-form noiseless rows and marks bad thetas") {
    BoundQuery query = make_query(0.5, 0.0, 0.0, DesignKind::ConstantColumn, Algorithm::Comp);
    const std::vector<double> grid{0.1, 0.3, 0.5, 0.7, 0.9};
    const std::vector<SweepRow> rows = rate_sweep(query, grid);
    REQUIRE(rows.size() == grid.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        REQUIRE(rows[i].result.has_value());
        CHECK(rows[i].error.empty());
        CHECK_THAT(rows[i].result->prefactor_c,
                   WithinRel(1.0 / ((1.0 - grid[i]) * log2sq), 1e-5));
    }

    CHECK(rate_sweep(query, {}).empty());

    const std::vector<SweepRow> bad = rate_sweep(query, {0.5, 0.0, 1.0});
    REQUIRE(bad.size() == 3);
    CHECK(bad[0].error.empty());
    CHECK_FALSE(bad[1].error.empty());
    CHECK_FALSE(bad[1].result.has_value());
    CHECK_FALSE(bad[2].error.empty());
}
