// Copyright (c) 2026 augrisk contributors
// Licensed under the Apache License, Version 2.0.

// Shared test-only helpers: random draws and independent numeric oracles
// (finite differences, elimination-based determinants). These deliberately
// avoid the library's analytic code paths.

#pragma once

#include <cmath>
#include <vector>

#include "augrisk/augment.hpp"
#include "augrisk/core.hpp"
#include "augrisk/model.hpp"

namespace testutil {

using augrisk::AugmentationOp;
using augrisk::Rng;
using augrisk::Span;
using augrisk::Vec;

// A 1-in/1-feature identity extractor, so head logits are set directly:
// logit_i = weights[i] * x + biases[i].
inline augrisk::ProbModel scalar_head_model(const Vec& weights, const Vec& biases) {
    augrisk::ModelConfig cfg;
    cfg.input_dim = 1;
    cfg.hidden = {};
    cfg.feature_dim = 1;
    cfg.num_classes = weights.size();
    cfg.seed = 0;
    augrisk::ProbModel m(cfg);
    Vec& p = m.params();
    std::fill(p.begin(), p.end(), 0.0);
    p[m.layer_weight_offset(0)] = 1.0;  // feature = x
    for (std::size_t i = 0; i < weights.size(); ++i) {
        p[m.head_offset() + 0 * weights.size() + i] = weights[i];
        p[m.head_offset() + 1 * weights.size() + i] = biases[i];
    }
    return m;
}

// Zeroes the classifier head so q is uniform regardless of features.
inline void zero_head(augrisk::ProbModel& m) {
    for (std::size_t i = m.head_offset(); i < m.param_count(); ++i) m.params()[i] = 0.0;
}

inline Vec random_vec(Rng& rng, std::size_t n, double lo = -2.0, double hi = 2.0) {
    Vec v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

inline Vec random_theta(Rng& rng, const augrisk::ParamSpace& box, double margin = 0.05) {
    Vec t(box.dims());
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double pad = margin * (box.upper[k] - box.lower[k]);
        t[k] = rng.uniform(box.lower[k] + pad, box.upper[k] - pad);
    }
    return t;
}

// Central finite-difference columns of dA/dtheta.
inline std::vector<Vec> fd_jacobian(const AugmentationOp& op, const Vec& theta, const Vec& x,
                                    double step = 1e-5) {
    std::vector<Vec> cols;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        Vec up = theta, down = theta;
        up[k] += step;
        down[k] -= step;
        const Vec a = op.apply(up, x);
        const Vec b = op.apply(down, x);
        Vec col(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) col[i] = (a[i] - b[i]) / (2.0 * step);
        cols.push_back(std::move(col));
    }
    return cols;
}

// Determinant by Gaussian elimination with partial pivoting; independent of
// the library's Cholesky route.
inline double elimination_det(std::vector<Vec> m) {
    const std::size_t n = m.size();
    double det = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t pivot = i;
        for (std::size_t r = i + 1; r < n; ++r)
            if (std::fabs(m[r][i]) > std::fabs(m[pivot][i])) pivot = r;
        if (m[pivot][i] == 0.0) return 0.0;
        if (pivot != i) {
            std::swap(m[pivot], m[i]);
            det = -det;
        }
        det *= m[i][i];
        for (std::size_t r = i + 1; r < n; ++r) {
            const double f = m[r][i] / m[i][i];
            for (std::size_t c = i; c < n; ++c) m[r][c] -= f * m[i][c];
        }
    }
    return det;
}

// sqrt(det(J^T J)) from finite-difference columns.
inline double fd_gram_factor(const AugmentationOp& op, const Vec& theta, const Vec& x) {
    const auto cols = fd_jacobian(op, theta, x);
    const std::size_t d = cols.size();
    std::vector<Vec> g(d, Vec(d));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) g[i][j] = augrisk::dot(cols[i], cols[j]);
    return std::sqrt(elimination_det(std::move(g)));
}

// One-sample Kolmogorov-Smirnov statistic against an analytic CDF.
template <typename Cdf>
inline double ks_statistic(Vec samples, Cdf&& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = double(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::fabs(f - double(i) / n));
        d = std::max(d, std::fabs(double(i + 1) / n - f));
    }
    return d;
}

// Asymptotic 1% critical value of the one-sample KS statistic.
inline double ks_critical_1pct(std::size_t n) { return 1.62762 / std::sqrt(double(n)); }

}  // namespace testutil
