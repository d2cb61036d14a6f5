// Copyright (c) 2026 augrisk contributors
// Licensed under the Apache License, Version 2.0.

/**
 * @file train.hpp
 * @brief Training strategies over augmented batches.
 *
 * The standard strategy minimizes the shifted empirical risk (cross-entropy
 * on augmented samples). The weighted strategy minimizes
 *   (1 - lambda) * (-ln q(y|x)) + lambda * (-ln q(y|x')),
 * which equals clean CE plus lambda times the gap term and coincides with the
 * standard loss at lambda = 1 and with clean CE at lambda = 0, exactly.
 */

#pragma once

#include "augrisk/data.hpp"
#include "augrisk/io.hpp"
#include "augrisk/risk.hpp"

namespace augrisk {

enum class Strategy { Standard, Ours };
enum class SchedKind { Cosine, Step };

struct TrainConfig {
    Strategy strategy = Strategy::Standard;
    double lambda = 0.5;  // used only by Strategy::Ours
    std::size_t batch_size = 32;
    std::size_t epochs = 10;
    double base_lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    std::size_t warmup_epochs = 0;
    SchedKind schedule = SchedKind::Cosine;
    std::vector<std::size_t> milestones;  // epochs, for SchedKind::Step
    double step_factor = 0.1;
    std::uint64_t seed = 1;
    std::size_t m_copies = 1;
    int max_attempts = 1000;
    bool fallback_to_identity = true;
    bool double_batch = false;  // 2x basic-batch-size baseline for the standard strategy

    void validate() const {
        if (lambda < 0.0 || lambda > 1.0) throw ConfigError("train: lambda must be in [0, 1]");
        if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
        if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
        if (m_copies < 1) throw ConfigError("train: m_copies must be >= 1");
        if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("train: momentum in [0, 1)");
        if (double_batch && strategy != Strategy::Standard)
            throw ConfigError("train: double_batch is a standard-strategy baseline option");
    }

    std::size_t effective_batch_size() const { return double_batch ? 2 * batch_size : batch_size; }
};

struct EpochRow {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double clean_risk = 0.0;
    double shifted_risk = 0.0;
    double gap = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double lr = 0.0;
};

struct RunRecord {
    std::vector<EpochRow> rows;
    std::size_t best_epoch = 0;
    double best_val_acc = 0.0;
    double test_acc = 0.0;
    double test_clean_risk = 0.0;
    std::string config_text;  // snapshot serialized by the caller
};

// ---------------------------------------------------------------------------
// Losses. Both are grouped double means so they agree with the risk
// estimators term for term.
// ---------------------------------------------------------------------------

/// Algorithm-1 loss: mean cross-entropy on augmented samples.
inline double loss_standard(const ProbModel& model, const std::vector<AugmentedPair>& pairs) {
    const PairGroups g = PairGroups::validate(pairs);
    double outer = 0.0;
    for (std::size_t i = 0; i < g.n_groups; ++i) {
        double inner = 0.0;
        for (std::size_t j = 0; j < g.group_size; ++j) {
            const auto& p = pairs[i * g.group_size + j];
            inner += -model.log_q(p.x_prime, p.y);
        }
        outer += inner / double(g.group_size);
    }
    return outer / double(g.n_groups);
}

/// Algorithm-2 loss: (1-lambda) * clean CE + lambda * augmented CE per group.
inline double loss_ours(const ProbModel& model, const std::vector<AugmentedPair>& pairs,
                        double lambda) {
    if (lambda < 0.0 || lambda > 1.0) throw Error("loss_ours: lambda must be in [0, 1]");
    const PairGroups g = PairGroups::validate(pairs);
    double outer = 0.0;
    for (std::size_t i = 0; i < g.n_groups; ++i) {
        const auto& first = pairs[i * g.group_size];
        double inner = 0.0;
        for (std::size_t j = 0; j < g.group_size; ++j) {
            const auto& p = pairs[i * g.group_size + j];
            inner += lambda * -model.log_q(p.x_prime, p.y);
        }
        outer += (1.0 - lambda) * -model.log_q(first.x, first.y) + inner / double(g.group_size);
    }
    return outer / double(g.n_groups);
}

/// Gradient term lists matching the two losses.
inline std::vector<NllTerm> loss_terms_standard(const std::vector<AugmentedPair>& pairs) {
    const PairGroups g = PairGroups::validate(pairs);
    const double c = 1.0 / (double(g.n_groups) * double(g.group_size));
    std::vector<NllTerm> terms;
    terms.reserve(pairs.size());
    for (const auto& p : pairs) terms.push_back({&p.x_prime, p.y, c});
    return terms;
}

inline std::vector<NllTerm> loss_terms_ours(const std::vector<AugmentedPair>& pairs,
                                            double lambda) {
    const PairGroups g = PairGroups::validate(pairs);
    const double c_clean = (1.0 - lambda) / double(g.n_groups);
    const double c_aug = lambda / (double(g.n_groups) * double(g.group_size));
    std::vector<NllTerm> terms;
    terms.reserve(pairs.size() + g.n_groups);
    for (std::size_t i = 0; i < g.n_groups; ++i) {
        const auto& first = pairs[i * g.group_size];
        terms.push_back({&first.x, first.y, c_clean});
        for (std::size_t j = 0; j < g.group_size; ++j) {
            const auto& p = pairs[i * g.group_size + j];
            terms.push_back({&p.x_prime, p.y, c_aug});
        }
    }
    return terms;
}

// ---------------------------------------------------------------------------
// Learning-rate schedule: linear warmup to base_lr over the warmup steps
// (first step already nonzero), then cosine decay to zero at the final step,
// or a step decay at epoch milestones.
// ---------------------------------------------------------------------------

inline double lr_at(const TrainConfig& cfg, std::size_t step, std::size_t steps_per_epoch) {
    const std::size_t warmup_steps = cfg.warmup_epochs * steps_per_epoch;
    if (step < warmup_steps)
        return cfg.base_lr * double(step + 1) / double(warmup_steps);
    if (cfg.schedule == SchedKind::Step) {
        const std::size_t epoch = step / steps_per_epoch;
        double lr = cfg.base_lr;
        for (std::size_t m : cfg.milestones)
            if (epoch >= m) lr *= cfg.step_factor;
        return lr;
    }
    const std::size_t total = cfg.epochs * steps_per_epoch;
    if (total <= warmup_steps) return cfg.base_lr;
    const double progress = double(step - warmup_steps) / double(total - warmup_steps);
    return cfg.base_lr * 0.5 * (1.0 + std::cos(M_PI * progress));
}

// ---------------------------------------------------------------------------
// Training loop (SGD + momentum + decoupled-style weight decay on weights).
// ---------------------------------------------------------------------------

struct TrainHooks {
    std::function<void(std::size_t step, double loss, double lr)> on_step;
};

namespace detail {

inline double accuracy(const ProbModel& model, const std::vector<Sample>& data) {
    if (data.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::size_t hits = 0;
    for (const auto& s : data) {
        const Vec u = model.logits(s.x);
        std::size_t best = 0;
        for (std::size_t i = 1; i < u.size(); ++i)
            if (u[i] > u[best]) best = i;
        if (int(best) == s.y) ++hits;
    }
    return double(hits) / double(data.size());
}

}  // namespace detail

/// Runs one experiment. Deterministic given (config, model config, splits):
/// the model draws from model_cfg.seed, batch order and augmentation streams
/// derive from cfg.seed, and the strategy never changes RNG consumption, so
/// lambda = 1 runs are step-for-step comparable with standard runs.
inline RunRecord train(const TrainConfig& cfg, const ModelConfig& model_cfg, const Splits& splits,
                       const AugmentationOp& op, const ParamPrior& prior,
                       const ConceptionOracle& oracle, ProbModel* out_model = nullptr,
                       const TrainHooks& hooks = {}) {
    cfg.validate();
    const auto& train_set = splits.train.samples;
    if (train_set.empty()) throw Error("train: empty training split");

    ProbModel model(model_cfg);
    Vec velocity(model.param_count(), 0.0);
    Vec best_params = model.params();

    const std::size_t batch = std::min(cfg.effective_batch_size(), train_set.size());
    const std::size_t steps_per_epoch = (train_set.size() + batch - 1) / batch;

    SampleOptions sopts;
    sopts.max_attempts = cfg.max_attempts;
    sopts.fallback_to_identity = cfg.fallback_to_identity;

    Rng shuffle_rng(Rng::derive(cfg.seed, 1));
    RunRecord record;
    record.best_val_acc = -1.0;
    std::size_t step = 0;

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        const std::uint64_t epoch_master = Rng::derive(cfg.seed, 1000 + epoch);
        double loss_sum = 0.0;
        const double epoch_lr = lr_at(cfg, step, steps_per_epoch);

        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(start + batch, order.size());
            std::vector<AugmentedPair> pairs;
            pairs.reserve((stop - start) * cfg.m_copies);
            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t idx = order[b];
                Rng stream(Rng::derive(epoch_master, idx));
                for (std::size_t j = 0; j < cfg.m_copies; ++j) {
                    AugmentedPair p = sample_can(op, prior, oracle, train_set[idx].x,
                                                 train_set[idx].y, stream, sopts);
                    p.sample_index = idx;
                    p.copy_index = j;
                    pairs.push_back(std::move(p));
                }
            }

            const auto terms = cfg.strategy == Strategy::Standard
                                   ? loss_terms_standard(pairs)
                                   : loss_terms_ours(pairs, cfg.lambda);
            GradientReport rep;
            try {
                rep = model.grad_loss(terms);
            } catch (const NonFiniteGradient& e) {
                throw NonFiniteLoss(std::string("training aborted at step ") +
                                        std::to_string(step) + ": " + e.what(),
                                    step);
            }
            if (!std::isfinite(rep.loss))
                throw NonFiniteLoss("training aborted at step " + std::to_string(step) +
                                        ": loss is not finite",
                                    step);

            const double lr = lr_at(cfg, step, steps_per_epoch);
            Vec& p = model.params();
            const Vec& mask = model.decay_mask();
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double g = rep.grad[i] + cfg.weight_decay * mask[i] * p[i];
                velocity[i] = cfg.momentum * velocity[i] + g;
                p[i] -= lr * velocity[i];
            }
            loss_sum += rep.loss;
            if (hooks.on_step) hooks.on_step(step, rep.loss, lr);
            ++step;
        }

        // Epoch metrics: risks on the training split with a fresh
        // deterministic augmentation draw, accuracies on train/val.
        Rng eval_rng(Rng::derive(cfg.seed, 500000 + epoch));
        const auto eval_pairs =
            batch_augment(train_set, op, prior, oracle, cfg.m_copies, eval_rng, sopts);
        const RiskDecomposition dec = decompose(model, eval_pairs);

        EpochRow row;
        row.epoch = epoch;
        row.train_loss = loss_sum / double(steps_per_epoch);
        row.clean_risk = dec.clean_risk;
        row.shifted_risk = dec.shifted_risk;
        row.gap = dec.gap;
        row.train_acc = detail::accuracy(model, train_set);
        row.val_acc = detail::accuracy(model, splits.val.samples);
        row.lr = epoch_lr;
        record.rows.push_back(row);

        const double score = splits.val.samples.empty() ? row.train_acc : row.val_acc;
        if (score > record.best_val_acc) {
            record.best_val_acc = score;
            record.best_epoch = epoch;
            best_params = model.params();
        }
    }

    // Final test metrics use the best-validation parameters.
    model.params() = best_params;
    record.test_acc = detail::accuracy(model, splits.test.samples);
    record.test_clean_risk =
        splits.test.samples.empty() ? std::numeric_limits<double>::quiet_NaN()
                                    : clean_risk(model, splits.test.samples);
    if (out_model) *out_model = model;
    return record;
}

// ---------------------------------------------------------------------------
// Persistence: metrics.csv + summary.txt + checkpoint.bin in a run directory.
// ---------------------------------------------------------------------------

inline void persist_run(const RunRecord& record, const ProbModel& best_model,
                        const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    CsvWriter csv({"epoch", "train_loss", "clean_risk", "shifted_risk", "gap", "train_acc",
                   "val_acc", "lr"});
    for (const auto& r : record.rows)
        csv.add_row({std::to_string(r.epoch), fmt_double(r.train_loss), fmt_double(r.clean_risk),
                     fmt_double(r.shifted_risk), fmt_double(r.gap), fmt_double(r.train_acc),
                     fmt_double(r.val_acc), fmt_double(r.lr)});
    csv.save(dir / "metrics.csv");

    KvSummary summary;
    summary.set("epochs", record.rows.size());
    summary.set("best_epoch", record.best_epoch);
    summary.set("best_val_acc", record.best_val_acc);
    summary.set("test_acc", record.test_acc);
    summary.set("test_clean_risk", record.test_clean_risk);
    summary.save(dir / "summary.txt");

    best_model.save_checkpoint(dir / "checkpoint.bin");
    if (!record.config_text.empty())
        write_text_file(dir / "config_snapshot.cfg", record.config_text);
}

}  // namespace augrisk
