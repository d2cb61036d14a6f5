// Copyright (c) 2026 augrisk contributors
// Licensed under the Apache License, Version 2.0.

/**
 * @file runner.hpp
 * @brief Subcommand bodies behind the CLI. Every command is deterministic
 *        given (config, seed), writes CSV tables plus a key = value summary
 *        into the output directory, and returns a stable exit code:
 *        0 pass, 1 invariant violation, 2 config error, 3 sampling failure.
 */

#pragma once

#include <optional>

#include "augrisk/config.hpp"
#include "augrisk/risk.hpp"
#include "augrisk/svg.hpp"
#include "augrisk/train.hpp"

namespace augrisk {

struct RunOptions {
    std::string out_dir;  // overrides the config's [output] dir when nonempty
    std::optional<std::uint64_t> seed_override;
    unsigned workers = 1;

    std::filesystem::path resolve_dir(const ExperimentConfig& ec) const {
        return out_dir.empty() ? std::filesystem::path(ec.out_dir)
                               : std::filesystem::path(out_dir);
    }
};

namespace detail {

inline void snapshot_config(const ExperimentConfig& ec, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text_file(dir / "config_snapshot.cfg", ec.canonical_text);
}

inline std::uint64_t master_seed(const ExperimentConfig& ec, const RunOptions& opts) {
    return opts.seed_override ? *opts.seed_override : ec.train_cfg.seed;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// sample-aug: draw M copies per clean sample, emit the accepted parameters.
// ---------------------------------------------------------------------------

inline int cmd_sample_aug(const ExperimentConfig& ec, const RunOptions& opts) {
    const std::filesystem::path dir = opts.resolve_dir(ec);
    detail::snapshot_config(ec, dir);

    const Dataset data = ec.build_dataset();
    const OpPtr op = ec.build_operator();
    const ParamPrior prior = ec.build_prior();
    Rng rng(detail::master_seed(ec, opts));
    const auto pairs = batch_augment(data.samples, *op, prior, data.oracle, ec.train_cfg.m_copies,
                                     rng, ec.sample_options(opts.workers));

    std::vector<std::string> header = {"sample_index", "copy_index"};
    for (std::size_t k = 0; k < op->space().dims(); ++k)
        header.push_back("theta" + std::to_string(k));
    header.push_back("attempts");
    header.push_back("accepted");
    CsvWriter csv(header);
    std::size_t total_attempts = 0, accepted = 0, fallbacks = 0;
    for (const auto& p : pairs) {
        std::vector<std::string> row = {std::to_string(p.sample_index),
                                        std::to_string(p.copy_index)};
        for (double t : p.theta) row.push_back(fmt_double(t));
        row.push_back(std::to_string(p.attempts));
        row.push_back(p.accepted ? "1" : "0");
        csv.add_row(row);
        total_attempts += std::size_t(p.attempts);
        accepted += p.accepted ? 1 : 0;
        fallbacks += p.accepted ? 0 : 1;
    }
    csv.save(dir / "samples.csv");

    KvSummary summary;
    summary.set("pairs", pairs.size());
    summary.set("attempts_total", total_attempts);
    summary.set("fallbacks", fallbacks);
    summary.set("acceptance_rate", double(accepted) / double(total_attempts));
    summary.set("status", std::string("ok"));
    summary.save(dir / "summary.txt");
    return 0;
}

// ---------------------------------------------------------------------------
// check-decomposition: 50 randomized exact-identity checks.
// ---------------------------------------------------------------------------

inline int cmd_check_decomposition(const ExperimentConfig& ec, const RunOptions& opts) {
    const std::filesystem::path dir = opts.resolve_dir(ec);
    detail::snapshot_config(ec, dir);

    const Dataset data = ec.build_dataset();
    const OpPtr op = ec.build_operator();
    const ParamPrior prior = ec.build_prior();
    const std::uint64_t master = detail::master_seed(ec, opts);

    CsvWriter csv({"case", "n", "m", "shifted_risk", "clean_risk", "gap", "residual"});
    double worst = 0.0;
    const std::size_t cases = 50;
    for (std::size_t c = 0; c < cases; ++c) {
        ModelConfig mc = ec.model;
        mc.input_dim = data.dim();
        mc.num_classes = std::size_t(data.num_classes);
        mc.seed = Rng::derive(master, 2 * c);
        const ProbModel model(mc);

        Rng rng(Rng::derive(master, 2 * c + 1));
        const std::size_t n = std::min<std::size_t>(data.size(), 8 + c % 9);
        const std::size_t m = 1 + c % 3;
        std::vector<Sample> batch(data.samples.begin(), data.samples.begin() + long(n));
        const auto pairs = batch_augment(batch, *op, prior, data.oracle, m, rng,
                                         ec.sample_options(opts.workers));
        const RiskDecomposition d = decompose(model, pairs);
        worst = std::max(worst, d.residual);
        csv.add_row({std::to_string(c), std::to_string(n), std::to_string(m),
                     fmt_double(d.shifted_risk), fmt_double(d.clean_risk), fmt_double(d.gap),
                     fmt_double(d.residual)});
    }
    csv.save(dir / "residuals.csv");

    const bool pass = worst <= 1e-10;
    KvSummary summary;
    summary.set("cases", cases);
    summary.set("worst_residual", worst);
    summary.set("tolerance", 1e-10);
    summary.set("status", std::string(pass ? "pass" : "fail"));
    summary.save(dir / "summary.txt");
    if (!pass) std::fprintf(stderr, "decomposition residual %.3e exceeds 1e-10\n", worst);
    return pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// bounds-check: the two-sided bound on |ln rho_x - ln rho_x'| over 1000 draws.
// ---------------------------------------------------------------------------

inline int cmd_bounds_check(const ExperimentConfig& ec, const RunOptions& opts) {
    const std::filesystem::path dir = opts.resolve_dir(ec);
    detail::snapshot_config(ec, dir);

    const Dataset data = ec.build_dataset();
    const OpPtr op = ec.build_operator();
    const ParamPrior prior = ec.build_prior();
    const std::uint64_t master = detail::master_seed(ec, opts);

    CsvWriter csv({"draw", "lhs", "lower", "upper", "alpha_star", "beta_star", "ok"});
    std::size_t violations = 0;
    const std::size_t n_models = 20, per_model = 50;
    for (std::size_t mi = 0; mi < n_models; ++mi) {
        ModelConfig mc = ec.model;
        mc.input_dim = data.dim();
        mc.num_classes = std::size_t(data.num_classes);
        mc.seed = Rng::derive(master, 77000 + mi);
        const ProbModel model(mc);
        Rng rng(Rng::derive(master, 88000 + mi));
        for (std::size_t d = 0; d < per_model; ++d) {
            const Sample& s = data.samples[rng.below(data.size())];
            const AugmentedPair p = sample_can(*op, prior, data.oracle, s.x, s.y, rng,
                                               ec.sample_options(1));
            const SandwichReport r = sandwich_bounds(model, p.x, p.x_prime, p.y);
            const bool ok = r.lower <= r.lhs && r.lhs <= r.upper;
            if (!ok) ++violations;
            csv.add_row({std::to_string(mi * per_model + d), fmt_double(r.lhs),
                         fmt_double(r.lower), fmt_double(r.upper), fmt_double(r.alpha_star),
                         fmt_double(r.beta_star), ok ? "1" : "0"});
        }
    }
    csv.save(dir / "bounds.csv");

    KvSummary summary;
    summary.set("draws", n_models * per_model);
    summary.set("violations", violations);
    summary.set("status", std::string(violations == 0 ? "pass" : "fail"));
    summary.save(dir / "summary.txt");
    if (violations) std::fprintf(stderr, "%zu sandwich violations\n", violations);
    return violations == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// variance-scan: Var(gap estimator) against N*M with a frozen model.
// ---------------------------------------------------------------------------

inline int cmd_variance_scan(const ExperimentConfig& ec, const RunOptions& opts) {
    const std::filesystem::path dir = opts.resolve_dir(ec);
    detail::snapshot_config(ec, dir);

    const Dataset data = ec.build_dataset();
    const OpPtr op = ec.build_operator();
    const ParamPrior prior = ec.build_prior();
    ModelConfig mc = ec.model;
    mc.input_dim = data.dim();
    mc.num_classes = std::size_t(data.num_classes);
    const ProbModel model(mc);

    SampleOptions sopts = ec.sample_options(opts.workers);
    const auto rows = variance_scan(model, data.samples, *op, prior, data.oracle, ec.scan_n,
                                    ec.scan_m_list, ec.scan_trials,
                                    detail::master_seed(ec, opts), sopts);
    const double slope = loglog_slope(rows);

    CsvWriter csv({"n", "m", "trials", "nm", "variance"});
    for (const auto& r : rows)
        csv.add_row({std::to_string(r.n), std::to_string(r.m), std::to_string(r.trials),
                     std::to_string(r.n * r.m), fmt_double(r.empirical_variance)});
    csv.save(dir / "variance.csv");

    const bool pass = slope >= -1.15 && slope <= -0.85;
    KvSummary summary;
    summary.set("slope", slope);
    summary.set("slope_lo", -1.15);
    summary.set("slope_hi", -0.85);
    summary.set("status", std::string(pass ? "pass" : "fail"));
    summary.save(dir / "summary.txt");
    if (!pass) std::fprintf(stderr, "variance slope %.4f outside [-1.15, -0.85]\n", slope);
    return pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// train: one run, persisted under run_<confighash>_s<seed>/.
// ---------------------------------------------------------------------------

inline int cmd_train(const ExperimentConfig& ec, const RunOptions& opts) {
    const std::filesystem::path base = opts.resolve_dir(ec);
    TrainConfig tc = ec.train_cfg;
    if (opts.seed_override) tc.seed = *opts.seed_override;

    const Dataset data = ec.build_dataset();
    const Splits splits = split(data, ec.split_spec);
    const OpPtr op = ec.build_operator();
    const ParamPrior prior = ec.build_prior();
    ModelConfig mc = ec.model;
    mc.input_dim = data.dim();
    mc.num_classes = std::size_t(data.num_classes);

    ProbModel best(mc);
    RunRecord record = train(tc, mc, splits, *op, prior, data.oracle, &best);
    record.config_text = ec.canonical_text;

    const std::filesystem::path dir =
        base / ("run_" + config_hash(ec.canonical_text) + "_s" + std::to_string(tc.seed));
    persist_run(record, best, dir);

    LinePlot plot("accuracy", "epoch", "accuracy");
    std::vector<std::pair<double, double>> train_pts, val_pts;
    for (const auto& r : record.rows) {
        train_pts.emplace_back(double(r.epoch), r.train_acc);
        if (std::isfinite(r.val_acc)) val_pts.emplace_back(double(r.epoch), r.val_acc);
    }
    plot.add_series("train", train_pts);
    if (!val_pts.empty()) plot.add_series("val", val_pts);
    plot.save(dir / "accuracy.svg");

    KvSummary note;
    note.set("run_dir", dir.string());
    note.set("test_acc", record.test_acc);
    note.save(base / "last_run.txt");
    return 0;
}

// ---------------------------------------------------------------------------
// ablate-lambda: a training run per (lambda, seed); mean/std table per lambda.
// Always exits 0; failed cells are recorded as NaN rows.
// ---------------------------------------------------------------------------

inline int cmd_ablate_lambda(const ExperimentConfig& ec, const RunOptions& opts,
                             std::vector<double> lambdas = {},
                             std::vector<std::uint64_t> seeds = {}) {
    const std::filesystem::path dir = opts.resolve_dir(ec);
    detail::snapshot_config(ec, dir);
    if (lambdas.empty()) lambdas.assign(ec.ablate_lambdas.begin(), ec.ablate_lambdas.end());
    if (seeds.empty()) seeds = ec.ablate_seeds;

    const Dataset data = ec.build_dataset();
    const Splits splits = split(data, ec.split_spec);
    const OpPtr op = ec.build_operator();
    const ParamPrior prior = ec.build_prior();
    ModelConfig mc = ec.model;
    mc.input_dim = data.dim();
    mc.num_classes = std::size_t(data.num_classes);

    CsvWriter cells({"lambda", "seed", "test_acc", "test_clean_risk"});
    CsvWriter table({"lambda", "runs", "mean_test_acc", "std_test_acc", "mean_test_clean_risk",
                     "std_test_clean_risk"});
    for (double lambda : lambdas) {
        Vec accs, risks;
        for (std::uint64_t seed : seeds) {
            TrainConfig tc = ec.train_cfg;
            tc.strategy = Strategy::Ours;
            tc.lambda = lambda;
            tc.seed = seed;
            double acc = std::numeric_limits<double>::quiet_NaN();
            double risk = std::numeric_limits<double>::quiet_NaN();
            try {
                const RunRecord rec = train(tc, mc, splits, *op, prior, data.oracle);
                acc = rec.test_acc;
                risk = rec.test_clean_risk;
                accs.push_back(acc);
                risks.push_back(risk);
            } catch (const Error& e) {
                std::fprintf(stderr, "ablate lambda=%g seed=%llu failed: %s\n", lambda,
                             static_cast<unsigned long long>(seed), e.what());
            }
            cells.add_row({fmt_double(lambda), std::to_string(seed), fmt_double(acc),
                           fmt_double(risk)});
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        table.add_row({fmt_double(lambda), std::to_string(accs.size()),
                       fmt_double(accs.empty() ? nan : mean(accs)),
                       fmt_double(accs.empty() ? nan : std::sqrt(sample_variance(accs))),
                       fmt_double(risks.empty() ? nan : mean(risks)),
                       fmt_double(risks.empty() ? nan : std::sqrt(sample_variance(risks)))});
    }
    cells.save(dir / "ablation_cells.csv");
    table.save(dir / "ablation.csv");

    KvSummary summary;
    summary.set("lambdas", lambdas.size());
    summary.set("seeds", seeds.size());
    summary.set("status", std::string("ok"));
    summary.save(dir / "summary.txt");
    return 0;
}

/// Exception-to-exit-code mapping shared by the CLI entry points.
template <typename Fn>
int run_guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const AcceptanceExhausted& e) {
        std::fprintf(stderr, "sampling failure: %s\n", e.what());
        return 3;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace augrisk
