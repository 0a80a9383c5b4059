// Command-line surface: bound tables, capacity queries, Monte-Carlo
// experiments, parameter sweeps, and design-comparison tables, all emitting
// reproducible CSV or JSON-lines.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "noisygt/noisygt.hpp"

namespace {

using namespace noisygt;
using ordered_json = nlohmann::ordered_json;

DesignKind parse_design(const std::string& token) {
    if (token == "cc") return DesignKind::ConstantColumn;
    if (token == "bernoulli") return DesignKind::Bernoulli;
    throw CLI::ValidationError("--design", "expected cc or bernoulli");
}

const char* design_token(DesignKind k) {
    return k == DesignKind::ConstantColumn ? "cc" : "bernoulli";
}

Algorithm parse_algorithm(const std::string& token) {
    if (token == "comp") return Algorithm::Comp;
    if (token == "dd") return Algorithm::Dd;
    throw CLI::ValidationError("--alg", "expected comp or dd");
}

// Output destination: a file path, or stdout for "-".
struct Sink {
    std::unique_ptr<std::ofstream> file;
    std::ostream* os = nullptr;

    explicit Sink(const std::string& path) {
        if (path.empty() || path == "-") {
            os = &std::cout;
            return;
        }
        file = std::make_unique<std::ofstream>(path, std::ios::binary);
        if (!*file) throw std::runtime_error("cannot open output file: " + path);
        os = file.get();
    }
    std::ostream& stream() { return *os; }
};

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    return out;
}

std::string join_strings(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += v[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bound tables (bounds / sweep share the row schema)

struct BoundRow {
    double theta = 0.0, p = 0.0, q = 0.0;
    std::string design;     // empty for converse and reference rows
    std::string algorithm;  // comp | dd | converse | noiseless-optimal
    std::optional<BoundResult> result;
    std::string error;
};

BoundResult noiseless_reference(double theta) {
    // Best possible noiseless non-adaptive prefactor: counting bound 1/log 2
    // against the theta/(1-theta) branch.
    const double l2 = std::log(2.0);
    BoundResult res;
    res.prefactor_c = std::max(1.0 / l2, theta / ((1.0 - theta) * l2 * l2));
    res.d_star = l2;
    res.binding_constraint = "";
    res.rate_bits = 1.0 / (res.prefactor_c * l2);
    return res;
}

const std::vector<std::string> bound_columns = {
    "theta",  "p",      "q",      "design", "algorithm", "prefactor", "rate_bits",
    "alpha_star", "beta_star", "d_star", "z_star", "zeta_star", "binding", "error"};

std::vector<std::string> bound_row_fields(const BoundRow& row) {
    std::vector<std::string> f;
    f.push_back(format_double(row.theta));
    f.push_back(format_double(row.p));
    f.push_back(format_double(row.q));
    f.push_back(row.design);
    f.push_back(row.algorithm);
    if (row.result) {
        const BoundResult& r = *row.result;
        f.push_back(format_double(r.prefactor_c));
        f.push_back(format_double(r.rate_bits));
        f.push_back(format_optional(r.alpha_star));
        f.push_back(format_optional(r.beta_star));
        f.push_back(format_double(r.d_star));
        f.push_back(format_optional(r.z_star));
        f.push_back(format_optional(r.zeta_star));
        f.push_back(r.binding_constraint);
    } else {
        for (int i = 0; i < 8; ++i) f.emplace_back();
    }
    f.push_back(row.error);
    return f;
}

ordered_json bound_row_json(const BoundRow& row) {
    ordered_json j;
    j["theta"] = row.theta;
    j["p"] = row.p;
    j["q"] = row.q;
    j["design"] = row.design;
    j["algorithm"] = row.algorithm;
    if (row.result) {
        const BoundResult& r = *row.result;
        j["prefactor"] = r.prefactor_c;
        j["rate_bits"] = r.rate_bits;
        if (r.alpha_star) j["alpha_star"] = *r.alpha_star;
        if (r.beta_star) j["beta_star"] = *r.beta_star;
        j["d_star"] = r.d_star;
        if (r.z_star) j["z_star"] = *r.z_star;
        if (r.zeta_star) j["zeta_star"] = *r.zeta_star;
        j["binding"] = r.binding_constraint;
    }
    if (!row.error.empty()) j["error"] = row.error;
    return j;
}

void emit_bound_rows(Sink& sink, const std::string& format, const std::string& echo,
                     std::uint64_t seed, const std::vector<BoundRow>& rows) {
    std::ostream& os = sink.stream();
    if (format == "csv") {
        write_preamble(os, echo, seed);
        write_csv_row(os, bound_columns);
        for (const auto& row : rows) write_csv_row(os, bound_row_fields(row));
    } else {
        ordered_json meta;
        meta["tool"] = "noisygt";
        meta["version"] = version_string;
        meta["schema"] = schema_version;
        meta["cmd"] = echo;
        meta["seed"] = seed;
        os << meta.dump() << '\n';
        for (const auto& row : rows) os << bound_row_json(row).dump() << '\n';
    }
    os.flush();
}

// Computes comp/dd rows for one (theta, channel), appending converse and the
// noiseless reference curve.
void collect_bound_rows(std::vector<BoundRow>& rows, double theta, double p, double q,
                        DesignKind design, const std::vector<std::string>& algs,
                        const OptimizerOptions& opt) {
    auto make_row = [&](const std::string& alg_label, const std::string& design_label,
                        auto&& compute) {
        BoundRow row;
        row.theta = theta;
        row.p = p;
        row.q = q;
        row.design = design_label;
        row.algorithm = alg_label;
        try {
            row.result = compute();
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    };
    for (const auto& alg : algs) {
        make_row(alg, design_token(design), [&] {
            BoundQuery query;
            query.theta = theta;
            query.channel = ChannelParams(p, q);
            query.design = design;
            query.algorithm = parse_algorithm(alg);
            return optimize_bound(query, opt);
        });
    }
    make_row("converse", "", [&] { return converse_constant(ChannelParams(p, q)); });
    make_row("noiseless-optimal", "", [&] { return noiseless_reference(theta); });
}

int finish_with_errors(const std::vector<BoundRow>& rows) {
    int failures = 0;
    for (const auto& row : rows)
        if (!row.error.empty()) ++failures;
    if (failures > 0) {
        std::cerr << failures << " of " << rows.size() << " rows failed\n";
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// simulate

const std::vector<std::string> simulate_columns = {
    "n",     "theta", "p",     "q",         "design",    "algorithm",
    "multiplier", "trials", "seed",  "k",         "m",         "delta",
    "alpha", "beta",  "d",     "prefactor", "rate_bits", "success_rate",
    "mean_false_pos", "mean_false_neg", "mean_stage1_unresolved"};

std::vector<std::string> simulate_row_fields(const ResultRow& r) {
    return {std::to_string(r.n),
            format_double(r.theta),
            format_double(r.p),
            format_double(r.q),
            design_token(r.design),
            algorithm_name(r.algorithm),
            format_double(r.multiplier),
            std::to_string(r.trials),
            std::to_string(r.seed),
            std::to_string(r.k),
            std::to_string(r.m),
            std::to_string(r.delta),
            format_double(r.alpha),
            format_double(r.beta),
            format_double(r.d),
            format_double(r.prefactor),
            format_double(r.rate_bits),
            format_double(r.success_rate),
            format_double(r.mean_false_pos),
            format_double(r.mean_false_neg),
            format_double(r.mean_stage1_unresolved)};
}

ordered_json simulate_row_json(const ResultRow& r) {
    ordered_json j;
    j["n"] = r.n;
    j["theta"] = r.theta;
    j["p"] = r.p;
    j["q"] = r.q;
    j["design"] = design_token(r.design);
    j["algorithm"] = algorithm_name(r.algorithm);
    j["multiplier"] = r.multiplier;
    j["trials"] = r.trials;
    j["seed"] = r.seed;
    j["k"] = r.k;
    j["m"] = r.m;
    j["delta"] = r.delta;
    j["alpha"] = r.alpha;
    j["beta"] = r.beta;
    j["d"] = r.d;
    j["prefactor"] = r.prefactor;
    j["rate_bits"] = r.rate_bits;
    j["success_rate"] = r.success_rate;
    j["mean_false_pos"] = r.mean_false_pos;
    j["mean_false_neg"] = r.mean_false_neg;
    j["mean_stage1_unresolved"] = r.mean_stage1_unresolved;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"noisy group testing: bounds, capacity, and simulation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value config file (see README)");

    // ---- capacity ----
    auto* cap_cmd = app.add_subcommand("capacity", "p-q channel capacity and counting bound");
    double cap_p = 0.0, cap_q = 0.0;
    cap_cmd->add_option("--p", cap_p, "false-positive probability")->required();
    cap_cmd->add_option("--q", cap_q, "false-negative probability")->required();

    // ---- bounds ----
    auto* bounds_cmd = app.add_subcommand("bounds", "achievability/converse prefactor table");
    std::vector<double> b_thetas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    double b_p = 0.0, b_q = 0.0;
    std::vector<std::string> b_algs{"comp", "dd"};
    std::string b_design = "cc", b_out = "-", b_format = "csv";
    std::uint64_t b_seed = 1;
    OptimizerOptions b_opt;
    bounds_cmd->add_option("--theta", b_thetas, "sparsity exponents")->delimiter(',');
    bounds_cmd->add_option("--p", b_p, "false-positive probability");
    bounds_cmd->add_option("--q", b_q, "false-negative probability");
    bounds_cmd->add_option("--alg", b_algs, "algorithms (comp,dd)")->delimiter(',');
    bounds_cmd->add_option("--design", b_design, "cc or bernoulli")
        ->check(CLI::IsMember({"cc", "bernoulli"}));
    bounds_cmd->add_option("--out", b_out, "output path (- for stdout)");
    bounds_cmd->add_option("--format", b_format, "csv or jsonl")
        ->check(CLI::IsMember({"csv", "jsonl"}));
    bounds_cmd->add_option("--seed", b_seed, "seed echoed in the preamble")
        ->envname("NOISYGT_SEED");
    bounds_cmd->add_option("--d-min", b_opt.d_min, "lower end of the d search window");
    bounds_cmd->add_option("--d-max", b_opt.d_max, "upper end of the d search window");

    // ---- sweep ----
    auto* sweep_cmd = app.add_subcommand("sweep", "theta x channel product sweep");
    std::vector<double> s_thetas{0.1, 0.3, 0.5, 0.7, 0.9};
    std::vector<double> s_ps{0.0}, s_qs{0.0};
    std::vector<std::string> s_algs{"comp", "dd"};
    std::string s_design = "cc", s_out = "-", s_format = "csv";
    std::uint64_t s_seed = 1;
    OptimizerOptions s_opt;
    sweep_cmd->add_option("--theta", s_thetas, "sparsity exponents")->delimiter(',');
    sweep_cmd->add_option("--p", s_ps, "false-positive probabilities")->delimiter(',');
    sweep_cmd->add_option("--q", s_qs, "false-negative probabilities")->delimiter(',');
    sweep_cmd->add_option("--alg", s_algs, "algorithms (comp,dd)")->delimiter(',');
    sweep_cmd->add_option("--design", s_design, "cc or bernoulli")
        ->check(CLI::IsMember({"cc", "bernoulli"}));
    sweep_cmd->add_option("--out", s_out, "output path (- for stdout)");
    sweep_cmd->add_option("--format", s_format, "csv or jsonl")
        ->check(CLI::IsMember({"csv", "jsonl"}));
    sweep_cmd->add_option("--seed", s_seed, "seed echoed in the preamble")
        ->envname("NOISYGT_SEED");
    sweep_cmd->add_option("--d-min", s_opt.d_min, "lower end of the d search window");
    sweep_cmd->add_option("--d-max", s_opt.d_max, "upper end of the d search window");

    // ---- compare ----
    auto* compare_cmd =
        app.add_subcommand("compare", "COMP/DD x Bernoulli/constant-column design comparison");
    std::vector<double> c_thetas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    double c_p = 0.0, c_q = 0.0;
    std::string c_out = "-", c_format = "csv";
    std::uint64_t c_seed = 1;
    OptimizerOptions c_opt;
    compare_cmd->add_option("--theta", c_thetas, "sparsity exponents")->delimiter(',');
    compare_cmd->add_option("--p", c_p, "false-positive probability");
    compare_cmd->add_option("--q", c_q, "false-negative probability");
    compare_cmd->add_option("--out", c_out, "output path (- for stdout)");
    compare_cmd->add_option("--format", c_format, "csv or jsonl")
        ->check(CLI::IsMember({"csv", "jsonl"}));
    compare_cmd->add_option("--seed", c_seed, "seed echoed in the preamble")
        ->envname("NOISYGT_SEED");
    compare_cmd->add_option("--d-min", c_opt.d_min, "lower end of the d search window");
    compare_cmd->add_option("--d-max", c_opt.d_max, "upper end of the d search window");

    // ---- simulate ----
    auto* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo recovery experiments");
    ExperimentConfig sim;
    std::string sim_design = "cc", sim_alg = "comp", sim_out = "-", sim_format = "csv";
    std::string sim_dump, sim_mode = "nominal";
    double sim_p = 0.0, sim_q = 0.0;
    std::uint32_t sim_k = 0;
    sim_cmd->add_option("--n", sim.n, "item count")->required();
    sim_cmd->add_option("--theta", sim.theta, "sparsity exponent")->required();
    sim_cmd->add_option("--p", sim_p, "false-positive probability");
    sim_cmd->add_option("--q", sim_q, "false-negative probability");
    sim_cmd->add_option("--design", sim_design, "cc or bernoulli")
        ->check(CLI::IsMember({"cc", "bernoulli"}));
    sim_cmd->add_option("--alg", sim_alg, "comp or dd")->check(CLI::IsMember({"comp", "dd"}));
    sim_cmd->add_option("--mult", sim.multipliers, "test-budget multipliers")->delimiter(',');
    sim_cmd->add_option("--trials", sim.trials, "Monte-Carlo trials per multiplier");
    sim_cmd->add_option("--seed", sim.seed, "base seed")->envname("NOISYGT_SEED");
    sim_cmd->add_option("--out", sim_out, "output path (- for stdout)");
    sim_cmd->add_option("--format", sim_format, "csv or jsonl")
        ->check(CLI::IsMember({"csv", "jsonl"}));
    sim_cmd->add_option("--threads", sim.threads, "trial parallelism (never affects results)");
    sim_cmd->add_option("--dump-design", sim_dump,
                        "write the first trial's design to this path");
    sim_cmd->add_option("--k", sim_k, "override the infected count (misspecified k)");
    sim_cmd->add_option("--threshold-mode", sim_mode, "nominal or per-item")
        ->check(CLI::IsMember({"nominal", "per-item"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*cap_cmd) {
            const ChannelParams ch(cap_p, cap_q);
            if (ch.flipped) {
                std::cout << "notice: p+q>1; normalized to p=" << format_double(ch.p)
                          << " q=" << format_double(ch.q) << " (displayed outcomes flipped)\n";
            }
            const CapacityResult cap = channel_capacity(ch);
            std::cout << "p " << format_double(ch.p) << "\n";
            std::cout << "q " << format_double(ch.q) << "\n";
            std::cout << "capacity_nats " << format_double(cap.capacity_nats) << "\n";
            std::cout << "capacity_bits " << format_double(cap.capacity_bits()) << "\n";
            std::cout << "phi " << format_double(cap.phi) << "\n";
            std::cout << "t_star " << format_double(cap.t_star) << "\n";
            std::cout << "gamma_star " << format_double(cap.gamma_star) << "\n";
            std::cout << "d_ch " << format_double(cap.d_heuristic) << "\n";
            std::cout << "count_prefactor " << format_double(1.0 / cap.capacity_nats) << "\n";
            return 0;
        }

        if (*bounds_cmd) {
            if (b_algs.empty()) throw CLI::ValidationError("--alg", "algorithm list is empty");
            std::vector<BoundRow> rows;
            for (double theta : b_thetas)
                collect_bound_rows(rows, theta, b_p, b_q, parse_design(b_design), b_algs, b_opt);
            std::ostringstream echo;
            echo << "bounds --theta " << join_doubles(b_thetas) << " --p " << format_double(b_p)
                 << " --q " << format_double(b_q) << " --alg " << join_strings(b_algs)
                 << " --design " << b_design << " --format " << b_format;
            Sink sink(b_out);
            emit_bound_rows(sink, b_format, echo.str(), b_seed, rows);
            return finish_with_errors(rows);
        }

        if (*sweep_cmd) {
            if (s_algs.empty()) throw CLI::ValidationError("--alg", "algorithm list is empty");
            std::vector<BoundRow> rows;
            for (double theta : s_thetas)
                for (double p : s_ps)
                    for (double q : s_qs)
                        collect_bound_rows(rows, theta, p, q, parse_design(s_design), s_algs,
                                           s_opt);
            std::ostringstream echo;
            echo << "sweep --theta " << join_doubles(s_thetas) << " --p " << join_doubles(s_ps)
                 << " --q " << join_doubles(s_qs) << " --alg " << join_strings(s_algs)
                 << " --design " << s_design << " --format " << s_format;
            Sink sink(s_out);
            emit_bound_rows(sink, s_format, echo.str(), s_seed, rows);
            return finish_with_errors(rows);
        }

        if (*compare_cmd) {
            struct CompareRow {
                double theta;
                std::optional<double> converse, cc_comp, cc_dd, ber_comp, ber_dd;
                std::string error;
            };
            std::vector<CompareRow> rows;
            for (double theta : c_thetas) {
                CompareRow row;
                row.theta = theta;
                auto solve = [&](DesignKind dk, Algorithm alg) -> std::optional<double> {
                    try {
                        BoundQuery query;
                        query.theta = theta;
                        query.channel = ChannelParams(c_p, c_q);
                        query.design = dk;
                        query.algorithm = alg;
                        return optimize_bound(query, c_opt).prefactor_c;
                    } catch (const std::exception& e) {
                        if (!row.error.empty()) row.error += "; ";
                        row.error += std::string(algorithm_name(alg)) + "/" + design_token(dk) +
                                     ": " + e.what();
                        return std::nullopt;
                    }
                };
                try {
                    row.converse = converse_constant(ChannelParams(c_p, c_q)).prefactor_c;
                } catch (const std::exception& e) {
                    row.error = std::string("converse: ") + e.what();
                }
                row.cc_comp = solve(DesignKind::ConstantColumn, Algorithm::Comp);
                row.cc_dd = solve(DesignKind::ConstantColumn, Algorithm::Dd);
                row.ber_comp = solve(DesignKind::Bernoulli, Algorithm::Comp);
                row.ber_dd = solve(DesignKind::Bernoulli, Algorithm::Dd);
                rows.push_back(std::move(row));
            }
            std::ostringstream echo;
            echo << "compare --theta " << join_doubles(c_thetas) << " --p " << format_double(c_p)
                 << " --q " << format_double(c_q) << " --format " << c_format;
            Sink sink(c_out);
            std::ostream& os = sink.stream();
            int failures = 0;
            if (c_format == "csv") {
                write_preamble(os, echo.str(), c_seed);
                write_csv_row(os, {"theta", "p", "q", "converse", "cc_comp", "cc_dd", "ber_comp",
                                   "ber_dd", "error"});
                for (const auto& row : rows) {
                    write_csv_row(os, {format_double(row.theta), format_double(c_p),
                                       format_double(c_q), format_optional(row.converse),
                                       format_optional(row.cc_comp), format_optional(row.cc_dd),
                                       format_optional(row.ber_comp), format_optional(row.ber_dd),
                                       row.error});
                    if (!row.error.empty()) ++failures;
                }
            } else {
                ordered_json meta;
                meta["tool"] = "noisygt";
                meta["version"] = version_string;
                meta["schema"] = schema_version;
                meta["cmd"] = echo.str();
                meta["seed"] = c_seed;
                os << meta.dump() << '\n';
                for (const auto& row : rows) {
                    ordered_json j;
                    j["theta"] = row.theta;
                    j["p"] = c_p;
                    j["q"] = c_q;
                    if (row.converse) j["converse"] = *row.converse;
                    if (row.cc_comp) j["cc_comp"] = *row.cc_comp;
                    if (row.cc_dd) j["cc_dd"] = *row.cc_dd;
                    if (row.ber_comp) j["ber_comp"] = *row.ber_comp;
                    if (row.ber_dd) j["ber_dd"] = *row.ber_dd;
                    if (!row.error.empty()) {
                        j["error"] = row.error;
                        ++failures;
                    }
                    os << j.dump() << '\n';
                }
            }
            os.flush();
            if (failures > 0) {
                std::cerr << failures << " of " << rows.size() << " rows failed\n";
                return 1;
            }
            return 0;
        }

        if (*sim_cmd) {
            sim.channel = ChannelParams(sim_p, sim_q);
            sim.design = parse_design(sim_design);
            sim.algorithm = parse_algorithm(sim_alg);
            sim.mode = sim_mode == "nominal" ? ThresholdMode::Nominal : ThresholdMode::PerItem;
            if (sim_k > 0) sim.k_override = sim_k;

            std::ostringstream echo;
            echo << "simulate --n " << sim.n << " --theta " << format_double(sim.theta) << " --p "
                 << format_double(sim_p) << " --q " << format_double(sim_q) << " --design "
                 << sim_design << " --alg " << sim_alg << " --mult "
                 << join_doubles(sim.multipliers) << " --trials " << sim.trials << " --seed "
                 << sim.seed << " --threshold-mode " << sim_mode;
            if (sim.k_override) echo << " --k " << *sim.k_override;
            echo << " --format " << sim_format;

            Sink sink(sim_out);
            std::ostream& os = sink.stream();
            if (sim_format == "csv") {
                write_preamble(os, echo.str(), sim.seed);
                write_csv_row(os, simulate_columns);
            } else {
                ordered_json meta;
                meta["tool"] = "noisygt";
                meta["version"] = version_string;
                meta["schema"] = schema_version;
                meta["cmd"] = echo.str();
                meta["seed"] = sim.seed;
                os << meta.dump() << '\n';
            }
            auto on_row = [&](const ResultRow& row) {
                if (sim_format == "csv") {
                    write_csv_row(os, simulate_row_fields(row));
                } else {
                    os << simulate_row_json(row).dump() << '\n';
                }
                os.flush();
                std::cerr << "simulate: mult=" << format_double(row.multiplier) << " m=" << row.m
                          << " delta=" << row.delta << " success=" << format_double(row.success_rate)
                          << " wallclock=" << format_double(row.wallclock_s) << "s\n";
            };
            PoolingDesign dumped;
            run_experiment(sim, on_row, OptimizerOptions{},
                           sim_dump.empty() ? nullptr : &dumped);
            if (!sim_dump.empty()) {
                std::ofstream df(sim_dump, std::ios::binary);
                if (!df) throw std::runtime_error("cannot open dump path: " + sim_dump);
                write_design(dumped, df);
            }
            return 0;
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
