// Copyright (c) 2026 augrisk contributors
// Licensed under the Apache License, Version 2.0.

/**
 * @file risk.hpp
 * @brief Risk estimators over clean samples and paired augmented batches.
 *
 * The shifted empirical risk decomposes exactly as
 *   shifted = clean + gap,   gap = mean ln(q(y|x)/q(y|x')),
 * a per-sample algebraic identity once every quantity is computed as a
 * difference of log-densities. Ratios of probabilities are never materialized.
 */

#pragma once

#include "augrisk/cansample.hpp"
#include "augrisk/core.hpp"
#include "augrisk/model.hpp"

namespace augrisk {

// ---------------------------------------------------------------------------
// Grouped pair views: N groups of equal size M, clean-index-major.
// ---------------------------------------------------------------------------

struct PairGroups {
    std::size_t n_groups = 0;
    std::size_t group_size = 0;

    static PairGroups validate(const std::vector<AugmentedPair>& pairs) {
        if (pairs.empty()) throw Error("empty pair list");
        std::vector<std::size_t> sizes;
        std::size_t run = 1;
        for (std::size_t i = 1; i < pairs.size(); ++i) {
            if (pairs[i].sample_index == pairs[i - 1].sample_index) {
                ++run;
            } else {
                sizes.push_back(run);
                run = 1;
            }
        }
        sizes.push_back(run);
        for (std::size_t s : sizes)
            if (s != sizes[0])
                throw RaggedGroups("pair groups have unequal sizes (" + std::to_string(sizes[0]) +
                                   " vs " + std::to_string(s) + ")");
        return {sizes.size(), sizes[0]};
    }
};

// ---------------------------------------------------------------------------
// Estimators.
// ---------------------------------------------------------------------------

/// Mean cross-entropy -log q(y_i | x_i) over clean samples.
inline double clean_risk(const ProbModel& model, const std::vector<Sample>& batch) {
    if (batch.empty()) throw Error("clean_risk: empty batch");
    double s = 0.0;
    for (const auto& sm : batch) s += -model.log_q(sm.x, sm.y);
    return s / double(batch.size());
}

/// (1/N) sum_i (1/M) sum_j -log q(y_i | x'_ij) over a grouped pair list.
inline double shifted_risk(const ProbModel& model, const std::vector<AugmentedPair>& pairs) {
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

/// (1/N) sum_i (1/M) sum_j [log q(y_i|x_i) - log q(y_i|x'_ij)], in log space.
inline double gap_estimator(const ProbModel& model, const std::vector<AugmentedPair>& pairs) {
    const PairGroups g = PairGroups::validate(pairs);
    double outer = 0.0;
    for (std::size_t i = 0; i < g.n_groups; ++i) {
        const auto& first = pairs[i * g.group_size];
        const double la = model.log_q(first.x, first.y);
        double inner = 0.0;
        for (std::size_t j = 0; j < g.group_size; ++j) {
            const auto& p = pairs[i * g.group_size + j];
            inner += la - model.log_q(p.x_prime, p.y);
        }
        outer += inner / double(g.group_size);
    }
    return outer / double(g.n_groups);
}

struct RiskDecomposition {
    double shifted_risk = 0.0;
    double clean_risk = 0.0;
    double gap = 0.0;
    double residual = 0.0;  // |shifted - (clean + gap)|
};

/// All three estimators on the same paired batch; the clean batch is the
/// deduplicated group representatives.
inline RiskDecomposition decompose(const ProbModel& model,
                                   const std::vector<AugmentedPair>& pairs) {
    const PairGroups g = PairGroups::validate(pairs);
    double shifted = 0.0, clean = 0.0, gap = 0.0;
    for (std::size_t i = 0; i < g.n_groups; ++i) {
        const auto& first = pairs[i * g.group_size];
        const double la = model.log_q(first.x, first.y);
        double inner_shift = 0.0, inner_gap = 0.0;
        for (std::size_t j = 0; j < g.group_size; ++j) {
            const auto& p = pairs[i * g.group_size + j];
            const double lb = model.log_q(p.x_prime, p.y);
            inner_shift += -lb;
            inner_gap += la - lb;
        }
        shifted += inner_shift / double(g.group_size);
        gap += inner_gap / double(g.group_size);
        clean += -la;
    }
    RiskDecomposition d;
    d.shifted_risk = shifted / double(g.n_groups);
    d.clean_risk = clean / double(g.n_groups);
    d.gap = gap / double(g.n_groups);
    d.residual = std::fabs(d.shifted_risk - (d.clean_risk + d.gap));
    return d;
}

// ---------------------------------------------------------------------------
// Sandwich bounds on the per-pair gap magnitude.
//
// With rho_{x,j} = exp((w_j - w_y)^T h(x)) and rho_x their sum over classes,
// |ln q(y|x) - ln q(y|x')| = |ln rho_x - ln rho_x'|. Mean-value bounds give
//   |rho_x - rho_x'| / (l * max{beta*, 1}) <= lhs <= |rho_x - rho_x'| / alpha*
// where alpha*/beta* are the min/max realized rho_{.,j} over classes and both
// samples. The factor l appears because each rho is a sum of l terms bounded
// by beta*.
// ---------------------------------------------------------------------------

struct SandwichReport {
    double lhs = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double alpha_star = 0.0;
    double beta_star = 0.0;
};

inline SandwichReport sandwich_bounds(const ProbModel& model, const Vec& x, const Vec& x_prime,
                                      int y) {
    const std::size_t l = model.num_classes();
    const Vec ux = model.logits(x);
    const Vec up = model.logits(x_prime);
    Vec dx(l), dp(l);
    for (std::size_t j = 0; j < l; ++j) {
        dx[j] = ux[j] - ux[std::size_t(y)];
        dp[j] = up[j] - up[std::size_t(y)];
    }
    SandwichReport r;
    r.alpha_star = std::numeric_limits<double>::infinity();
    double rho_x = 0.0, rho_p = 0.0;
    for (std::size_t j = 0; j < l; ++j) {
        const double a = std::exp(dx[j]);
        const double b = std::exp(dp[j]);
        rho_x += a;
        rho_p += b;
        r.alpha_star = std::min({r.alpha_star, a, b});
        r.beta_star = std::max({r.beta_star, a, b});
    }
    if (!(r.alpha_star > 0.0) || !std::isfinite(rho_x) || !std::isfinite(rho_p))
        throw DegenerateBounds("rho terms overflowed or collapsed to zero");
    r.lhs = std::fabs(logsumexp(dx) - logsumexp(dp));
    const double diff = std::fabs(rho_x - rho_p);
    r.lower = diff / (double(l) * std::max(r.beta_star, 1.0));
    r.upper = diff / r.alpha_star;
    return r;
}

// ---------------------------------------------------------------------------
// Monte Carlo variance of the gap estimator as a function of N*M.
// ---------------------------------------------------------------------------

struct VarianceScanRow {
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t trials = 0;
    double empirical_variance = 0.0;
};

/// For each M, the empirical variance of the gap estimator over `trials`
/// independent augmentation redraws with the clean samples and model frozen.
/// Trial t of row M uses the RNG stream derive(derive(seed, M), t), so rows
/// are reproducible and trials may run on any number of workers.
inline std::vector<VarianceScanRow> variance_scan(const ProbModel& model,
                                                  const std::vector<Sample>& dataset,
                                                  const AugmentationOp& op,
                                                  const ParamPrior& prior,
                                                  const ConceptionOracle& oracle, std::size_t n,
                                                  const std::vector<std::size_t>& m_list,
                                                  std::size_t trials, std::uint64_t seed,
                                                  const SampleOptions& opts = {}) {
    if (trials < 100) throw Error("variance_scan: need at least 100 trials");
    if (dataset.size() < n) throw Error("variance_scan: dataset smaller than N");
    const std::vector<Sample> clean(dataset.begin(), dataset.begin() + long(n));
    std::vector<VarianceScanRow> rows;
    for (std::size_t m : m_list) {
        Vec gaps(trials);
        const std::uint64_t row_seed = Rng::derive(seed, m);
        parallel_for(trials, opts.workers, [&](std::size_t t) {
            Rng stream(Rng::derive(row_seed, t));
            SampleOptions serial = opts;
            serial.workers = 1;
            const auto pairs = batch_augment(clean, op, prior, oracle, m, stream, serial);
            gaps[t] = gap_estimator(model, pairs);
        });
        rows.push_back({n, m, trials, sample_variance(gaps)});
    }
    return rows;
}

/// Least-squares slope of log(variance) against log(N*M).
inline double loglog_slope(const std::vector<VarianceScanRow>& rows) {
    if (rows.size() < 2) throw Error("loglog_slope: need at least two rows");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& r : rows) {
        const double x = std::log(double(r.n * r.m));
        const double y = std::log(r.empirical_variance);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double k = double(rows.size());
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Per-feature diagnostics: softmax entropy of the per-feature class density
// and the spread of head weights across classes. Low mean entropy marks a
// feature the head relies on ("major").
// ---------------------------------------------------------------------------

struct FeatureDiagnosticsRow {
    std::size_t feature = 0;
    double mean_entropy = 0.0;
    double weight_spread = 0.0;
    bool major = false;
};

inline std::vector<FeatureDiagnosticsRow> feature_diagnostics(
    const ProbModel& model, const std::vector<Sample>& batch, double entropy_threshold = -1.0,
    bool include_bias = false) {
    if (batch.empty()) throw Error("feature_diagnostics: empty batch");
    const std::size_t l = model.num_classes();
    const std::size_t d_max = model.feature_dim() + (include_bias ? 1 : 0);
    if (entropy_threshold < 0.0) entropy_threshold = std::log(double(l)) / 2.0;

    std::vector<Vec> feats;
    feats.reserve(batch.size());
    for (const auto& s : batch) {
        Vec h = model.features(s.x);
        h.push_back(1.0);  // absorbed bias feature
        feats.push_back(std::move(h));
    }

    std::vector<FeatureDiagnosticsRow> rows;
    for (std::size_t d = 0; d < d_max; ++d) {
        double ent_sum = 0.0;
        for (const auto& h : feats) {
            Vec u(l);
            for (std::size_t i = 0; i < l; ++i) u[i] = model.head_weight(d, int(i)) * h[d];
            const double lse = logsumexp(u);
            double ent = 0.0;
            for (std::size_t i = 0; i < l; ++i) {
                const double lp = u[i] - lse;
                ent -= std::exp(lp) * lp;
            }
            ent_sum += ent;
        }
        double wmean = 0.0;
        for (std::size_t i = 0; i < l; ++i) wmean += model.head_weight(d, int(i));
        wmean /= double(l);
        double spread = 0.0;
        for (std::size_t i = 0; i < l; ++i)
            spread = std::max(spread, std::fabs(model.head_weight(d, int(i)) - wmean));
        const double mean_ent = ent_sum / double(batch.size());
        rows.push_back({d, mean_ent, spread, mean_ent < entropy_threshold});
    }
    return rows;
}

}  // namespace augrisk
