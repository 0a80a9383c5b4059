#pragma once

// Noisy COMP and noisy DD, threshold calibration from the bounds module, and
// recovery evaluation.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bounds.hpp"
#include "design.hpp"

namespace noisygt {

// Nominal mode thresholds every item at the design's nominal degree, the
// form the achievability proofs analyze; per-item mode thresholds each item
// at its own degree, which only differs under Bernoulli designs.
enum class ThresholdMode { Nominal, PerItem };

struct DecoderConfig {
    double alpha = 0.0;
    double beta = 0.0;  // DD only
    bool flip_normalized = false;  // displayed bits come from a p+q>1 channel and must be inverted
    ThresholdMode mode = ThresholdMode::Nominal;
};

struct DecodeResult {
    std::vector<std::uint8_t> infected_mask;
    // Items not declared healthy by DD's stage 1 (for COMP, its infected set).
    std::vector<std::uint8_t> stage1_survivor;
};

struct RecoveryReport {
    bool exact = false;
    std::uint32_t false_positives = 0;
    std::uint32_t false_negatives = 0;
    std::uint32_t dd_stage1_unresolved = 0;  // truly healthy items surviving stage 1
};

// "alpha Delta or more" with two guards: the product is nudged before ceil so
// an intended integer (0.3 * 100 = 30.000000000000004) is not pushed up a
// step, and the floor of 1 turns a vanishing calibrated alpha into the 1/Delta
// instantiation the corollaries use.  Degree-0 items get threshold 1 and can
// never meet it, so they are declared infected.
inline std::uint32_t count_threshold(double fraction, double degree) {
    const double raw = std::ceil(fraction * degree - 1e-9);
    if (raw <= 1.0) return 1;
    return static_cast<std::uint32_t>(raw);
}

namespace detail {

inline OutcomeVector normalize_displayed(const OutcomeVector& displayed, bool flip) {
    if (!flip) return displayed;
    OutcomeVector out = displayed;
    for (auto& b : out.bits) b ^= 1;
    return out;
}

inline double nominal_degree(const PoolingDesign& g) { return g.delta; }

}  // namespace detail

// Declare healthy exactly the items appearing in at least ceil(alpha Delta)
// displayed-negative tests.
inline DecodeResult noisy_comp(const PoolingDesign& g, const OutcomeVector& displayed_in,
                               const DecoderConfig& cfg) {
    const OutcomeVector displayed = detail::normalize_displayed(displayed_in, cfg.flip_normalized);
    const std::vector<std::uint32_t> neg = negative_counts(g, displayed);
    DecodeResult res;
    res.infected_mask.assign(g.n, 0);
    const std::uint32_t nominal_thr = count_threshold(cfg.alpha, detail::nominal_degree(g));
    for (std::uint32_t x = 0; x < g.n; ++x) {
        const std::uint32_t thr =
            cfg.mode == ThresholdMode::Nominal
                ? nominal_thr
                : count_threshold(cfg.alpha, static_cast<double>(g.item_tests[x].size()));
        res.infected_mask[x] = neg[x] >= thr ? 0 : 1;
    }
    res.stage1_survivor = res.infected_mask;
    return res;
}

// Stage 1: COMP's healthy rule.  Stage 2: among survivors, declare infected
// the items that are the only survivor in at least ceil(beta Delta)
// displayed-positive tests; the classified set stays fixed at the stage-1
// result while stage 2 runs.  Stage 3: everyone else is healthy.
inline DecodeResult noisy_dd(const PoolingDesign& g, const OutcomeVector& displayed_in,
                             const DecoderConfig& cfg) {
    const OutcomeVector displayed = detail::normalize_displayed(displayed_in, cfg.flip_normalized);
    const std::vector<std::uint32_t> neg = negative_counts(g, displayed);
    std::vector<std::uint8_t> healthy(g.n, 0);
    const std::uint32_t nominal_alpha_thr = count_threshold(cfg.alpha, detail::nominal_degree(g));
    for (std::uint32_t x = 0; x < g.n; ++x) {
        const std::uint32_t thr =
            cfg.mode == ThresholdMode::Nominal
                ? nominal_alpha_thr
                : count_threshold(cfg.alpha, static_cast<double>(g.item_tests[x].size()));
        healthy[x] = neg[x] >= thr ? 1 : 0;
    }

    const std::vector<std::uint32_t> solo = positive_solo_counts(g, displayed, healthy);
    DecodeResult res;
    res.infected_mask.assign(g.n, 0);
    res.stage1_survivor.assign(g.n, 0);
    const std::uint32_t nominal_beta_thr = count_threshold(cfg.beta, detail::nominal_degree(g));
    for (std::uint32_t x = 0; x < g.n; ++x) {
        if (healthy[x]) continue;
        res.stage1_survivor[x] = 1;
        const std::uint32_t thr =
            cfg.mode == ThresholdMode::Nominal
                ? nominal_beta_thr
                : count_threshold(cfg.beta, static_cast<double>(g.item_tests[x].size()));
        res.infected_mask[x] = solo[x] >= thr ? 1 : 0;
    }
    return res;
}

inline RecoveryReport evaluate(const DecodeResult& estimate, const InfectionVector& sigma) {
    if (estimate.infected_mask.size() != sigma.n)
        throw std::invalid_argument("evaluate: dimension mismatch");
    RecoveryReport rep;
    for (std::uint32_t x = 0; x < sigma.n; ++x) {
        const bool est = estimate.infected_mask[x] != 0;
        const bool truth = sigma.mask[x] != 0;
        if (est && !truth) ++rep.false_positives;
        if (!est && truth) ++rep.false_negatives;
        if (!truth && x < estimate.stage1_survivor.size() && estimate.stage1_survivor[x])
            ++rep.dd_stage1_unresolved;
    }
    rep.exact = rep.false_positives == 0 && rep.false_negatives == 0;
    return rep;
}

struct Calibration {
    double alpha = 0.0;
    double beta = 0.0;
    double d = 0.0;
    double prefactor = 0.0;
};

// The optimizing (alpha*, beta*, d*) of the achievability bound, for use as
// decoder thresholds and design density.
inline Calibration calibrate(double theta, const ChannelParams& ch, Algorithm algorithm,
                             DesignKind design, const OptimizerOptions& opt = {}) {
    BoundQuery query;
    query.theta = theta;
    query.channel = ch;
    query.design = design;
    query.algorithm = algorithm;
    const BoundResult res = optimize_bound(query, opt);
    Calibration cal;
    cal.alpha = res.alpha_star.value_or(0.0);
    cal.beta = res.beta_star.value_or(0.0);
    cal.d = res.d_star;
    cal.prefactor = res.prefactor_c;
    return cal;
}

}  // namespace noisygt
