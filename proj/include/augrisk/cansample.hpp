// Copyright (c) 2026 augrisk contributors
// Licensed under the Apache License, Version 2.0.

/**
 * @file cansample.hpp
 * @brief Rejection sampling from label-consistent augmentation neighborhoods.
 *
 * A ConceptionOracle labels every sample; the consistency neighborhood of a
 * clean sample x is the set of augmented samples the oracle assigns the same
 * class. Parameters are drawn from a prior on the operator's box and rejected
 * until the augmented sample stays inside that neighborhood, which realizes
 * the prior truncated to the accepted parameter region.
 */

#pragma once

#include "augrisk/augment.hpp"
#include "augrisk/core.hpp"

namespace augrisk {

/// Deterministic ground-truth labeler over the sample domain.
struct ConceptionOracle {
    std::function<int(const Vec&)> labeler;
    int num_classes = 0;

    int operator()(const Vec& x) const { return labeler(x); }
};

// ---------------------------------------------------------------------------
// Priors over operator parameters.
// ---------------------------------------------------------------------------

class ParamPrior {
public:
    enum class Kind { UniformBox, TruncatedGaussian, Finite, Product };

    static ParamPrior uniform(ParamSpace box) {
        box.validate("uniform prior");
        ParamPrior p(Kind::UniformBox);
        p.box_ = std::move(box);
        return p;
    }

    static ParamPrior truncated_gaussian(Vec mean, Vec stddev, ParamSpace box) {
        box.validate("truncated-gaussian prior");
        if (mean.size() != box.dims() || stddev.size() != box.dims())
            throw ConfigError("truncated-gaussian prior: mean/std dimension mismatch");
        for (double s : stddev)
            if (!(s > 0.0)) throw ConfigError("truncated-gaussian prior: std must be positive");
        ParamPrior p(Kind::TruncatedGaussian);
        p.box_ = std::move(box);
        p.mean_ = std::move(mean);
        p.stddev_ = std::move(stddev);
        return p;
    }

    /// Uniform point masses on a finite atom set (counting measure).
    static ParamPrior finite(std::vector<Vec> atoms) {
        if (atoms.empty()) throw ConfigError("finite prior: no atoms");
        for (const auto& a : atoms)
            if (a.size() != atoms[0].size())
                throw ConfigError("finite prior: atoms have mixed dimensions");
        ParamPrior p(Kind::Finite);
        p.atoms_ = std::move(atoms);
        return p;
    }

    /// Independent product of per-component priors (composite operators).
    static ParamPrior product(std::vector<ParamPrior> parts) {
        if (parts.empty()) throw ConfigError("product prior: no components");
        ParamPrior p(Kind::Product);
        p.parts_ = std::move(parts);
        return p;
    }

    Kind kind() const { return kind_; }

    std::size_t dims() const {
        switch (kind_) {
            case Kind::Finite: return atoms_[0].size();
            case Kind::Product: {
                std::size_t d = 0;
                for (const auto& q : parts_) d += q.dims();
                return d;
            }
            default: return box_.dims();
        }
    }

    Vec sample(Rng& rng) const {
        switch (kind_) {
            case Kind::UniformBox: {
                Vec t(box_.dims());
                for (std::size_t k = 0; k < t.size(); ++k)
                    t[k] = rng.uniform(box_.lower[k], box_.upper[k]);
                return t;
            }
            case Kind::TruncatedGaussian: {
                Vec t(box_.dims());
                for (std::size_t k = 0; k < t.size(); ++k) {
                    double v = 0.0;
                    int tries = 0;
                    do {
                        v = mean_[k] + stddev_[k] * rng.normal();
                        if (++tries > 100000)
                            throw Error("truncated-gaussian prior: box has negligible mass");
                    } while (v < box_.lower[k] || v > box_.upper[k]);
                    t[k] = v;
                }
                return t;
            }
            case Kind::Finite: return atoms_[rng.below(atoms_.size())];
            case Kind::Product: {
                Vec t;
                for (const auto& q : parts_) {
                    Vec part = q.sample(rng);
                    t.insert(t.end(), part.begin(), part.end());
                }
                return t;
            }
        }
        throw Error("unreachable");
    }

    /// Lebesgue density at theta; zero outside the box. Finite-support priors
    /// have no density and throw.
    double density(Span theta) const {
        switch (kind_) {
            case Kind::UniformBox:
                return box_.contains(theta) ? 1.0 / box_.volume() : 0.0;
            case Kind::TruncatedGaussian: {
                if (!box_.contains(theta)) return 0.0;
                double d = 1.0;
                for (std::size_t k = 0; k < box_.dims(); ++k) {
                    const double z = (theta[k] - mean_[k]) / stddev_[k];
                    const double pdf =
                        std::exp(-0.5 * z * z) / (stddev_[k] * std::sqrt(2.0 * M_PI));
                    const double zlo = (box_.lower[k] - mean_[k]) / stddev_[k];
                    const double zhi = (box_.upper[k] - mean_[k]) / stddev_[k];
                    const double mass = 0.5 * (std::erf(zhi / std::sqrt(2.0)) -
                                               std::erf(zlo / std::sqrt(2.0)));
                    d *= pdf / mass;
                }
                return d;
            }
            case Kind::Finite:
                throw Error("finite prior: counting measure has no Lebesgue density");
            case Kind::Product: {
                double d = 1.0;
                std::size_t offset = 0;
                for (const auto& q : parts_) {
                    d *= q.density(theta.subspan(offset, q.dims()));
                    offset += q.dims();
                }
                return d;
            }
        }
        throw Error("unreachable");
    }

    const ParamSpace& box() const { return box_; }
    const std::vector<Vec>& atoms() const { return atoms_; }

private:
    explicit ParamPrior(Kind k) : kind_(k) {}

    Kind kind_;
    ParamSpace box_;
    Vec mean_, stddev_;
    std::vector<Vec> atoms_;
    std::vector<ParamPrior> parts_;
};

// ---------------------------------------------------------------------------
// Sampling.
// ---------------------------------------------------------------------------

struct AugmentedPair {
    Vec x;
    int y = 0;
    Vec x_prime;
    Vec theta;
    int attempts = 0;
    bool accepted = true;  // false only when the identity fallback fired
    std::size_t sample_index = 0;
    std::size_t copy_index = 0;
};

struct SampleOptions {
    int max_attempts = 1000;
    bool fallback_to_identity = true;
    unsigned workers = 1;
};

/// Draws theta from the prior until the augmented sample keeps the clean
/// sample's class. On exhaustion either returns the identity pair (x' = x)
/// or throws AcceptanceExhausted, per options.
inline AugmentedPair sample_can(const AugmentationOp& op, const ParamPrior& prior,
                                const ConceptionOracle& oracle, const Vec& x, int y,
                                Rng& rng, const SampleOptions& opts = {}) {
    if (opts.max_attempts < 1) throw Error("sample_can: max_attempts must be >= 1");
    if (oracle(x) != y)
        throw Error("sample_can: clean sample is not labeled y by the oracle");
    for (int attempt = 1; attempt <= opts.max_attempts; ++attempt) {
        Vec theta = prior.sample(rng);
        Vec x_prime = op.apply(theta, x);
        if (oracle(x_prime) == y)
            return {x, y, std::move(x_prime), std::move(theta), attempt, true, 0, 0};
    }
    if (!opts.fallback_to_identity)
        throw AcceptanceExhausted("sample_can: no acceptance within " +
                                  std::to_string(opts.max_attempts) + " attempts");
    return {x, y, x, op.identity(), opts.max_attempts, false, 0, 0};
}

/// M augmented copies for each of the N clean samples, grouped by clean index
/// (pairs are not shuffled). Each sample owns an RNG stream derived from
/// (master seed, sample index), so the result is independent of worker count.
inline std::vector<AugmentedPair> batch_augment(const std::vector<Sample>& dataset,
                                                const AugmentationOp& op,
                                                const ParamPrior& prior,
                                                const ConceptionOracle& oracle, std::size_t m,
                                                Rng& rng, const SampleOptions& opts = {}) {
    if (m < 1) throw Error("batch_augment: M must be >= 1");
    const std::uint64_t master = rng.next_u64();
    std::vector<AugmentedPair> pairs(dataset.size() * m);
    parallel_for(dataset.size(), opts.workers, [&](std::size_t i) {
        Rng stream(Rng::derive(master, i));
        for (std::size_t j = 0; j < m; ++j) {
            try {
                AugmentedPair p =
                    sample_can(op, prior, oracle, dataset[i].x, dataset[i].y, stream, opts);
                p.sample_index = i;
                p.copy_index = j;
                pairs[i * m + j] = std::move(p);
            } catch (const AcceptanceExhausted& e) {
                throw AcceptanceExhausted(std::string(e.what()) + " (sample " +
                                          std::to_string(i) + ")", i);
            }
        }
    });
    return pairs;
}

/// Unnormalized conditional density of x' given x under the pushforward of
/// the prior: prior(h^{-1}(x')) * jacobian_factor * 1{same class}. Zero
/// outside the consistency neighborhood or the operator image.
inline double conditional_density(const AugmentationOp& op, const ParamPrior& prior,
                                  const ConceptionOracle& oracle, const Vec& x,
                                  const Vec& x_prime) {
    if (!op.has_inverse())
        throw NoInverse(op.name() + ": density evaluation requires a tractable inverse");
    if (oracle(x_prime) != oracle(x)) return 0.0;
    Vec theta;
    try {
        theta = op.invert(x_prime, x);
    } catch (const NotInImage&) {
        return 0.0;
    }
    const double p = prior.density(theta);
    if (p == 0.0) return 0.0;
    return p * jacobian_factor(op, theta, x);
}

}  // namespace augrisk
