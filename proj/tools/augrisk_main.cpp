// Copyright (c) 2026 augrisk contributors
// Licensed under the Apache License, Version 2.0.

// Command-line front end. Every subcommand reads one experiment config file
// and writes CSV tables, a key = value summary and (for training) SVG curves
// into the output directory. Exit codes: 0 pass, 1 invariant violation,
// 2 config error, 3 sampling failure.

#include <CLI11.hpp>

#include "augrisk/runner.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned workers = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out_dir, "output directory (overrides [output] dir)");
    cmd->add_option("--seed", args.seed, "master seed override")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--workers", args.workers, "worker threads for sampling fan-out");
}

augrisk::RunOptions to_options(const CommonArgs& args) {
    augrisk::RunOptions opts;
    opts.out_dir = args.out_dir;
    if (args.seed_set) opts.seed_override = args.seed;
    opts.workers = args.workers;
    return opts;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"augrisk: augmentation-shift risk laboratory"};
    app.require_subcommand(1);

    CommonArgs sample_args, decomp_args, bounds_args, scan_args, train_args, ablate_args;
    std::vector<double> lambdas;
    std::vector<std::uint64_t> seeds;

    add_common(app.add_subcommand("sample-aug",
                                  "rejection-sample augmented copies and report acceptance"),
               sample_args);
    add_common(app.add_subcommand("check-decomposition",
                                  "verify shifted = clean + gap on randomized batches"),
               decomp_args);
    add_common(app.add_subcommand("bounds-check",
                                  "verify the two-sided bound on the per-pair gap"),
               bounds_args);
    add_common(app.add_subcommand("variance-scan",
                                  "measure Var(gap estimator) against N*M"),
               scan_args);
    add_common(app.add_subcommand("train", "run one training experiment"), train_args);
    auto* ablate = app.add_subcommand("ablate-lambda", "train a grid of (lambda, seed) runs");
    add_common(ablate, ablate_args);
    ablate->add_option("--lambdas", lambdas, "lambda values (overrides [ablate] lambdas)");
    ablate->add_option("--seeds", seeds, "seeds (overrides [ablate] seeds)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    auto dispatch = [&](const CommonArgs& args, auto&& fn) {
        return augrisk::run_guarded([&] {
            const augrisk::ExperimentConfig ec = augrisk::ExperimentConfig::load(args.config_path);
            return fn(ec, to_options(args));
        });
    };

    if (app.got_subcommand("sample-aug"))
        return dispatch(sample_args, [](const auto& ec, const auto& o) {
            return augrisk::cmd_sample_aug(ec, o);
        });
    if (app.got_subcommand("check-decomposition"))
        return dispatch(decomp_args, [](const auto& ec, const auto& o) {
            return augrisk::cmd_check_decomposition(ec, o);
        });
    if (app.got_subcommand("bounds-check"))
        return dispatch(bounds_args, [](const auto& ec, const auto& o) {
            return augrisk::cmd_bounds_check(ec, o);
        });
    if (app.got_subcommand("variance-scan"))
        return dispatch(scan_args, [](const auto& ec, const auto& o) {
            return augrisk::cmd_variance_scan(ec, o);
        });
    if (app.got_subcommand("train"))
        return dispatch(train_args, [](const auto& ec, const auto& o) {
            return augrisk::cmd_train(ec, o);
        });
    if (app.got_subcommand("ablate-lambda"))
        return dispatch(ablate_args, [&](const auto& ec, const auto& o) {
            return augrisk::cmd_ablate_lambda(ec, o, lambdas, seeds);
        });
    return 2;
}
