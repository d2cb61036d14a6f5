// Copyright (c) 2026 augrisk contributors
// Licensed under the Apache License, Version 2.0.

/**
 * @file augment.hpp
 * @brief Parameterized augmentation operators.
 *
 * An operator is a map A(theta, x) over a box-shaped parameter space with a
 * unique identity element e such that A(e, x) = x, an analytic parameter
 * Jacobian, and (where tractable) an inverse theta = invert(x', x).
 * Operators compose in a fixed application order into a CompositeOp whose
 * parameter space is the product of the component spaces.
 */

#pragma once

#include <memory>
#include <numeric>
#include <utility>

#include "augrisk/core.hpp"

namespace augrisk {

/// Axis-aligned box bounds on a parameter space.
struct ParamSpace {
    Vec lower;
    Vec upper;

    std::size_t dims() const { return lower.size(); }

    bool contains(Span theta) const {
        if (theta.size() != lower.size()) return false;
        for (std::size_t k = 0; k < theta.size(); ++k)
            if (!(theta[k] >= lower[k] && theta[k] <= upper[k])) return false;
        return true;
    }

    double volume() const {
        double v = 1.0;
        for (std::size_t k = 0; k < lower.size(); ++k) v *= upper[k] - lower[k];
        return v;
    }

    void validate(const std::string& where) const {
        if (lower.size() != upper.size() || lower.empty())
            throw ConfigError(where + ": parameter box bounds have mismatched or zero length");
        for (std::size_t k = 0; k < lower.size(); ++k)
            if (!(lower[k] < upper[k]))
                throw ConfigError(where + ": lower[" + std::to_string(k) +
                                  "] must be strictly below upper[" + std::to_string(k) + "]");
    }
};

class AugmentationOp {
public:
    AugmentationOp(std::string name, ParamSpace space, Vec identity, bool invertible,
                   bool differentiable)
        : name_(std::move(name)),
          space_(std::move(space)),
          identity_(std::move(identity)),
          has_inverse_(invertible),
          differentiable_(differentiable) {
        space_.validate(name_);
        if (!space_.contains(identity_))
            throw ConfigError(name_ + ": identity element lies outside the parameter box");
    }
    virtual ~AugmentationOp() = default;

    const std::string& name() const { return name_; }
    const ParamSpace& space() const { return space_; }
    const Vec& identity() const { return identity_; }
    bool has_inverse() const { return has_inverse_; }
    bool differentiable() const { return differentiable_; }

    Vec apply(Span theta, Span x) const {
        check_theta(theta);
        return apply_impl(theta, x);
    }

    /// Columns of dA/dtheta at (theta, x); each column is an n-vector.
    std::vector<Vec> param_jacobian(Span theta, Span x) const {
        if (!differentiable_)
            throw NotDifferentiable(name_ + ": parameter space is not differentiable");
        check_theta(theta);
        return param_jacobian_impl(theta, x);
    }

    /// Recovers theta with apply(theta, x) = x_prime, or throws NotInImage.
    virtual Vec invert(Span x_prime, Span x) const {
        (void)x_prime;
        (void)x;
        throw NoInverse(name_ + ": no tractable inverse");
    }

    /// Maps tangent vectors at x through dA/dx at (theta, x). Used to chain
    /// parameter Jacobians through composites.
    virtual std::vector<Vec> push_tangents(Span theta, Span x,
                                           const std::vector<Vec>& tangents) const {
        (void)theta;
        (void)x;
        (void)tangents;
        throw NotDifferentiable(name_ + ": input Jacobian unavailable");
    }

protected:
    virtual Vec apply_impl(Span theta, Span x) const = 0;
    virtual std::vector<Vec> param_jacobian_impl(Span theta, Span x) const {
        (void)theta;
        (void)x;
        throw NotDifferentiable(name_ + ": analytic Jacobian unavailable");
    }

    void check_theta(Span theta) const {
        if (theta.size() != space_.dims())
            throw ParamOutOfRange(name_ + ": parameter has dimension " +
                                  std::to_string(theta.size()) + ", expected " +
                                  std::to_string(space_.dims()));
        if (!space_.contains(theta))
            throw ParamOutOfRange(name_ + ": parameter outside the box");
    }

    // Verifies a candidate inverse; shared by the concrete invert() bodies.
    Vec checked_inverse(Vec theta, Span x_prime, Span x) const {
        if (!space_.contains(theta))
            throw NotInImage(name_ + ": recovered parameter outside the box");
        const Vec round_trip = apply_impl(theta, x);
        if (max_abs_diff(round_trip, x_prime) > 1e-6)
            throw NotInImage(name_ + ": sample not in the operator image (residual " +
                             std::to_string(max_abs_diff(round_trip, x_prime)) + ")");
        return theta;
    }

private:
    std::string name_;
    ParamSpace space_;
    Vec identity_;
    bool has_inverse_;
    bool differentiable_;
};

using OpPtr = std::shared_ptr<const AugmentationOp>;

// ---------------------------------------------------------------------------
// Rotation2D: blockwise planar rotation of a 2k-dimensional vector.
// Theta is the angle, identity 0.
// ---------------------------------------------------------------------------

class Rotation2D : public AugmentationOp {
public:
    explicit Rotation2D(double lo = -M_PI, double hi = M_PI)
        : AugmentationOp("rotation2d", ParamSpace{{lo}, {hi}}, {0.0}, true, true) {}

    Vec invert(Span x_prime, Span x) const override {
        check_even(x);
        // Angle recovery from the highest-energy block via atan2.
        std::size_t ref = 0;
        double best = -1.0;
        for (std::size_t b = 0; b + 1 < x.size(); b += 2) {
            const double e = x[b] * x[b] + x[b + 1] * x[b + 1];
            if (e > best) { best = e; ref = b; }
        }
        double theta = 0.0;
        if (best > 0.0) {
            const double a = x[ref], b = x[ref + 1];
            const double ap = x_prime[ref], bp = x_prime[ref + 1];
            theta = std::atan2(a * bp - b * ap, a * ap + b * bp);
        }
        return checked_inverse({theta}, x_prime, x);
    }

    std::vector<Vec> push_tangents(Span theta, Span x,
                                   const std::vector<Vec>& tangents) const override {
        (void)x;
        std::vector<Vec> out;
        out.reserve(tangents.size());
        for (const auto& t : tangents) out.push_back(rotate(theta[0], t));
        return out;
    }

protected:
    Vec apply_impl(Span theta, Span x) const override {
        check_even(x);
        return rotate(theta[0], x);
    }

    std::vector<Vec> param_jacobian_impl(Span theta, Span x) const override {
        check_even(x);
        const double c = std::cos(theta[0]), s = std::sin(theta[0]);
        Vec col(x.size());
        for (std::size_t b = 0; b + 1 < x.size(); b += 2) {
            col[b] = -s * x[b] - c * x[b + 1];
            col[b + 1] = c * x[b] - s * x[b + 1];
        }
        return {col};
    }

private:
    static Vec rotate(double theta, Span x) {
        const double c = std::cos(theta), s = std::sin(theta);
        Vec out(x.size());
        for (std::size_t b = 0; b + 1 < x.size(); b += 2) {
            out[b] = c * x[b] - s * x[b + 1];
            out[b + 1] = s * x[b] + c * x[b + 1];
        }
        return out;
    }

    void check_even(Span x) const {
        if (x.size() % 2 != 0)
            throw DomainError(name() + ": requires an even-dimensional sample");
    }
};

// ---------------------------------------------------------------------------
// AdditiveShift: x + theta with theta in an n-dimensional box.
// ---------------------------------------------------------------------------

class AdditiveShift : public AugmentationOp {
public:
    explicit AdditiveShift(ParamSpace box)
        : AugmentationOp("additive_shift", box, Vec(box.dims(), 0.0), true, true) {}

    AdditiveShift(Vec lo, Vec hi) : AdditiveShift(ParamSpace{std::move(lo), std::move(hi)}) {}

    /// Symmetric box [-b, b]^n.
    AdditiveShift(std::size_t dim, double bound)
        : AdditiveShift(Vec(dim, -bound), Vec(dim, bound)) {}

    Vec invert(Span x_prime, Span x) const override {
        check_dim(x);
        Vec theta(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) theta[i] = x_prime[i] - x[i];
        return checked_inverse(std::move(theta), x_prime, x);
    }

    std::vector<Vec> push_tangents(Span, Span, const std::vector<Vec>& tangents) const override {
        return tangents;
    }

protected:
    Vec apply_impl(Span theta, Span x) const override {
        check_dim(x);
        Vec out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + theta[i];
        return out;
    }

    std::vector<Vec> param_jacobian_impl(Span, Span x) const override {
        std::vector<Vec> cols(x.size(), Vec(x.size(), 0.0));
        for (std::size_t k = 0; k < x.size(); ++k) cols[k][k] = 1.0;
        return cols;
    }

private:
    void check_dim(Span x) const {
        if (x.size() != space().dims())
            throw DomainError(name() + ": sample dimension " + std::to_string(x.size()) +
                              " does not match the shift box dimension " +
                              std::to_string(space().dims()));
    }
};

// ---------------------------------------------------------------------------
// Scale: exp(theta) * x with scalar theta. Injective for x != 0.
// ---------------------------------------------------------------------------

class Scale : public AugmentationOp {
public:
    explicit Scale(double bound = 0.5)
        : AugmentationOp("scale", ParamSpace{{-bound}, {bound}}, {0.0}, true, true) {}

    Vec invert(Span x_prime, Span x) const override {
        const double xx = dot(x, x);
        if (xx == 0.0) throw NotInImage(name() + ": not injective at x = 0");
        const double xpx = dot(x_prime, x);
        if (!(xpx > 0.0)) throw NotInImage(name() + ": sample not a positive multiple of x");
        return checked_inverse({std::log(xpx / xx)}, x_prime, x);
    }

    std::vector<Vec> push_tangents(Span theta, Span,
                                   const std::vector<Vec>& tangents) const override {
        const double f = std::exp(theta[0]);
        std::vector<Vec> out = tangents;
        for (auto& t : out)
            for (double& v : t) v *= f;
        return out;
    }

protected:
    Vec apply_impl(Span theta, Span x) const override {
        const double f = std::exp(theta[0]);
        Vec out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = f * x[i];
        return out;
    }

    std::vector<Vec> param_jacobian_impl(Span theta, Span x) const override {
        const double f = std::exp(theta[0]);
        Vec col(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) col[i] = f * x[i];
        return {col};
    }
};

// ---------------------------------------------------------------------------
// ColorAdjust: per channel, v -> alpha + (1 + beta) * v^gamma on v in (0, 1].
// Theta is (alpha, beta, gamma) per channel, identity (0, 0, 1). Not a group
// action and has no tractable inverse.
// ---------------------------------------------------------------------------

class ColorAdjust : public AugmentationOp {
public:
    explicit ColorAdjust(std::size_t channels = 1, double alpha_bound = 0.3,
                         double beta_bound = 0.5, double gamma_lo = 0.5, double gamma_hi = 2.0)
        : AugmentationOp("color_adjust", make_space(channels, alpha_bound, beta_bound, gamma_lo, gamma_hi),
                         make_identity(channels), false, true),
          channels_(channels) {}

    std::size_t channels() const { return channels_; }

    std::vector<Vec> push_tangents(Span theta, Span x,
                                   const std::vector<Vec>& tangents) const override {
        const std::size_t block = check_blocks(x);
        Vec diag(x.size());
        for (std::size_t c = 0; c < channels_; ++c) {
            const double beta = theta[3 * c + 1], gamma = theta[3 * c + 2];
            for (std::size_t p = 0; p < block; ++p) {
                const double v = x[c * block + p];
                diag[c * block + p] = (1.0 + beta) * gamma * std::pow(v, gamma - 1.0);
            }
        }
        std::vector<Vec> out = tangents;
        for (auto& t : out)
            for (std::size_t i = 0; i < t.size(); ++i) t[i] *= diag[i];
        return out;
    }

protected:
    Vec apply_impl(Span theta, Span x) const override {
        const std::size_t block = check_blocks(x);
        Vec out(x.size());
        for (std::size_t c = 0; c < channels_; ++c) {
            const double alpha = theta[3 * c], beta = theta[3 * c + 1], gamma = theta[3 * c + 2];
            for (std::size_t p = 0; p < block; ++p) {
                const double v = x[c * block + p];
                out[c * block + p] = alpha + (1.0 + beta) * std::pow(v, gamma);
            }
        }
        return out;
    }

    std::vector<Vec> param_jacobian_impl(Span theta, Span x) const override {
        const std::size_t block = check_blocks(x);
        std::vector<Vec> cols(3 * channels_, Vec(x.size(), 0.0));
        for (std::size_t c = 0; c < channels_; ++c) {
            const double beta = theta[3 * c + 1], gamma = theta[3 * c + 2];
            for (std::size_t p = 0; p < block; ++p) {
                const std::size_t i = c * block + p;
                const double v = x[i];
                const double vg = std::pow(v, gamma);
                cols[3 * c][i] = 1.0;
                cols[3 * c + 1][i] = vg;
                cols[3 * c + 2][i] = (1.0 + beta) * vg * std::log(v);
            }
        }
        return cols;
    }

private:
    static ParamSpace make_space(std::size_t channels, double ab, double bb, double glo,
                                 double ghi) {
        Vec lo, hi;
        for (std::size_t c = 0; c < channels; ++c) {
            lo.insert(lo.end(), {-ab, -bb, glo});
            hi.insert(hi.end(), {ab, bb, ghi});
        }
        return {std::move(lo), std::move(hi)};
    }

    static Vec make_identity(std::size_t channels) {
        Vec e;
        for (std::size_t c = 0; c < channels; ++c) e.insert(e.end(), {0.0, 0.0, 1.0});
        return e;
    }

    std::size_t check_blocks(Span x) const {
        if (x.empty() || x.size() % channels_ != 0)
            throw DomainError(name() + ": sample dimension not divisible into " +
                              std::to_string(channels_) + " channels");
        for (double v : x)
            if (!(v > 0.0))
                throw DomainError(name() + ": channel value " + std::to_string(v) +
                                  " outside (0, 1]; clamp inputs at ingestion");
        return x.size() / channels_;
    }

    std::size_t channels_;
};

// ---------------------------------------------------------------------------
// DiscreteFlip: theta in {0, 1}; 1 mirrors each planar block about the
// vertical axis. Deliberately violates parameter differentiability and is
// excluded from all Jacobian paths.
// ---------------------------------------------------------------------------

class DiscreteFlip : public AugmentationOp {
public:
    DiscreteFlip() : AugmentationOp("discrete_flip", ParamSpace{{0.0}, {1.0}}, {0.0}, true, false) {}

    Vec invert(Span x_prime, Span x) const override {
        if (max_abs_diff(x_prime, x) <= 1e-6) return {0.0};
        Vec flipped = mirror(x);
        if (max_abs_diff(x_prime, flipped) <= 1e-6) return {1.0};
        throw NotInImage(name() + ": sample is neither x nor its mirror");
    }

protected:
    Vec apply_impl(Span theta, Span x) const override {
        if (theta[0] != 0.0 && theta[0] != 1.0)
            throw ParamOutOfRange(name() + ": parameter must be exactly 0 or 1");
        if (theta[0] == 0.0) return Vec(x.begin(), x.end());
        return mirror(x);
    }

private:
    static Vec mirror(Span x) {
        Vec out(x.begin(), x.end());
        for (std::size_t b = 0; b < out.size(); b += 2) out[b] = -out[b];
        return out;
    }
};

// ---------------------------------------------------------------------------
// CompositeOp: ops applied in the order given by a permutation sigma;
// sigma[0] names the component applied first. The parameter vector is the
// concatenation of component parameters in application order.
// ---------------------------------------------------------------------------

class CompositeOp : public AugmentationOp {
public:
    CompositeOp(std::vector<OpPtr> ops, std::vector<std::size_t> order)
        : AugmentationOp(composite_name(ops, order), composite_space(ops, order),
                         composite_identity(ops, order),
                         ops.size() == 1 && ops[0]->has_inverse(),
                         std::all_of(ops.begin(), ops.end(),
                                     [](const OpPtr& o) { return o->differentiable(); })),
          ops_(std::move(ops)),
          order_(std::move(order)) {}

    std::size_t size() const { return ops_.size(); }
    const OpPtr& component(std::size_t stage) const { return ops_[order_[stage]]; }

    Vec invert(Span x_prime, Span x) const override {
        if (ops_.size() == 1) return ops_[0]->invert(x_prime, x);
        throw NoInverse(name() + ": composite inversion is not tractable");
    }

    std::vector<Vec> push_tangents(Span theta, Span x,
                                   const std::vector<Vec>& tangents) const override {
        std::vector<Vec> cur = tangents;
        Vec state(x.begin(), x.end());
        std::size_t offset = 0;
        for (std::size_t k = 0; k < ops_.size(); ++k) {
            const auto& op = *ops_[order_[k]];
            const std::size_t d = op.space().dims();
            const Span block = theta.subspan(offset, d);
            cur = op.push_tangents(block, state, cur);
            state = op.apply(block, state);
            offset += d;
        }
        return cur;
    }

protected:
    Vec apply_impl(Span theta, Span x) const override {
        Vec state(x.begin(), x.end());
        std::size_t offset = 0;
        for (std::size_t k = 0; k < ops_.size(); ++k) {
            const auto& op = *ops_[order_[k]];
            const std::size_t d = op.space().dims();
            state = op.apply(theta.subspan(offset, d), state);
            offset += d;
        }
        return state;
    }

    std::vector<Vec> param_jacobian_impl(Span theta, Span x) const override {
        // Chain rule: columns belonging to earlier stages are pushed through
        // the input Jacobians of every later stage.
        std::vector<Vec> cols;
        Vec state(x.begin(), x.end());
        std::size_t offset = 0;
        for (std::size_t k = 0; k < ops_.size(); ++k) {
            const auto& op = *ops_[order_[k]];
            const std::size_t d = op.space().dims();
            const Span block = theta.subspan(offset, d);
            if (!cols.empty()) cols = op.push_tangents(block, state, cols);
            auto own = op.param_jacobian(block, state);
            for (auto& c : own) cols.push_back(std::move(c));
            state = op.apply(block, state);
            offset += d;
        }
        return cols;
    }

private:
    static std::string composite_name(const std::vector<OpPtr>& ops,
                                      const std::vector<std::size_t>& order) {
        validate(ops, order);
        std::string n = "composite(";
        for (std::size_t k = 0; k < order.size(); ++k) {
            if (k) n += "+";
            n += ops[order[k]]->name();
        }
        return n + ")";
    }

    static ParamSpace composite_space(const std::vector<OpPtr>& ops,
                                      const std::vector<std::size_t>& order) {
        validate(ops, order);
        ParamSpace s;
        for (std::size_t idx : order) {
            const auto& b = ops[idx]->space();
            s.lower.insert(s.lower.end(), b.lower.begin(), b.lower.end());
            s.upper.insert(s.upper.end(), b.upper.begin(), b.upper.end());
        }
        return s;
    }

    static Vec composite_identity(const std::vector<OpPtr>& ops,
                                  const std::vector<std::size_t>& order) {
        validate(ops, order);
        Vec e;
        for (std::size_t idx : order) {
            const auto& ei = ops[idx]->identity();
            e.insert(e.end(), ei.begin(), ei.end());
        }
        return e;
    }

    static void validate(const std::vector<OpPtr>& ops, const std::vector<std::size_t>& order) {
        if (ops.empty()) throw EmptyComposition("compose: empty operator list");
        if (order.size() != ops.size()) throw Error("compose: order length mismatch");
        std::vector<bool> seen(ops.size(), false);
        for (std::size_t idx : order) {
            if (idx >= ops.size() || seen[idx]) throw Error("compose: order is not a permutation");
            seen[idx] = true;
        }
    }

    std::vector<OpPtr> ops_;
    std::vector<std::size_t> order_;
};

inline std::shared_ptr<const CompositeOp> compose(std::vector<OpPtr> ops,
                                                  std::vector<std::size_t> order) {
    return std::make_shared<const CompositeOp>(std::move(ops), std::move(order));
}

/// Identity-order composition.
inline std::shared_ptr<const CompositeOp> compose(std::vector<OpPtr> ops) {
    std::vector<std::size_t> order(ops.size());
    std::iota(order.begin(), order.end(), 0);
    return compose(std::move(ops), std::move(order));
}

// ---------------------------------------------------------------------------
// Pushforward density factor: sqrt(det(J^T J)) for the parameter Jacobian J.
// Reduces to |det J| when the parameter dimension equals the sample dimension.
// ---------------------------------------------------------------------------

inline double jacobian_factor(const AugmentationOp& op, Span theta, Span x) {
    const auto cols = op.param_jacobian(theta, x);
    const double det = gram_det(cols);
    if (det < 1e-300)
        throw SingularJacobian(op.name() + ": Gram determinant underflow (" +
                               std::to_string(det) + ")");
    return std::sqrt(det);
}

}  // namespace augrisk
