// Copyright (c) 2026 augrisk contributors
// Licensed under the Apache License, Version 2.0.

/**
 * @file model.hpp
 * @brief Probabilistic softmax classifier q(y|x) = softmax(W^T h(x)).
 *
 * The feature extractor h is a small MLP with a smooth activation so that
 * every gradient used in this repository survives a central finite-difference
 * check. The head bias is absorbed as a constant appended feature, all
 * parameters live in one flat float64 vector, and log-densities always go
 * through a log-sum-exp path.
 */

#pragma once

#include "augrisk/core.hpp"
#include "augrisk/io.hpp"

namespace augrisk {

enum class Activation { Tanh, Softplus };

struct ModelConfig {
    std::size_t input_dim = 2;
    std::vector<std::size_t> hidden = {16};
    std::size_t feature_dim = 8;
    std::size_t num_classes = 2;
    Activation activation = Activation::Tanh;
    std::uint64_t seed = 1;
};

/// One weighted term coeff * (-log q(y | *x)) of a loss. Non-owning.
struct NllTerm {
    const Vec* x;
    int y;
    double coeff;
};

struct GradientReport {
    double loss = 0.0;
    Vec grad;
    double finite_diff_max_rel_err = -1.0;  // filled only by the checker
};

class ProbModel {
public:
    explicit ProbModel(const ModelConfig& cfg) : cfg_(cfg) {
        if (cfg.num_classes < 2) throw ConfigError("model: need at least 2 classes");
        if (cfg.feature_dim < 1 || cfg.input_dim < 1)
            throw ConfigError("model: dimensions must be positive");
        dims_.push_back(cfg.input_dim);
        for (std::size_t w : cfg.hidden) {
            if (w < 1) throw ConfigError("model: hidden widths must be positive");
            dims_.push_back(w);
        }
        dims_.push_back(cfg.feature_dim);
        layout();
        init(cfg.seed);
    }

    const ModelConfig& config() const { return cfg_; }
    std::size_t input_dim() const { return cfg_.input_dim; }
    std::size_t feature_dim() const { return cfg_.feature_dim; }
    std::size_t num_classes() const { return cfg_.num_classes; }
    std::size_t param_count() const { return params_.size(); }

    const Vec& params() const { return params_; }
    Vec& params() { return params_; }

    /// 1 for entries that take weight decay (layer weights, head rows for real
    /// features); 0 for layer biases and the absorbed head bias row.
    const Vec& decay_mask() const { return decay_mask_; }

    std::size_t num_layers() const { return dims_.size() - 1; }

    Vec features(const Vec& x) const {
        Vec a = x;
        for (std::size_t k = 0; k + 1 < dims_.size(); ++k) a = layer_forward(k, a);
        return a;
    }

    Vec logits(const Vec& x) const { return head_logits(features(x)); }

    Vec log_q_all(const Vec& x) const {
        Vec u = logits(x);
        const double lse = logsumexp(u);
        for (double& v : u) v -= lse;
        return u;
    }

    double log_q(const Vec& x, int y) const {
        check_class(y);
        Vec u = logits(x);
        return u[std::size_t(y)] - logsumexpVec(u);
    }

    /// Per-feature class density exp(w_{i,d} h_d) / sum_j exp(w_{j,d} h_d).
    double feature_density(const Vec& x, std::size_t d, int y) const {
        check_class(y);
        if (d >= cfg_.feature_dim) throw Error("feature index out of range");
        const Vec h = features(x);
        return feature_density_at(h[d], d, y);
    }

    double feature_density_at(double h_d, std::size_t d, int y) const {
        const std::size_t l = cfg_.num_classes;
        Vec u(l);
        for (std::size_t i = 0; i < l; ++i) u[i] = head_weight(d, int(i)) * h_d;
        return std::exp(u[std::size_t(y)] - logsumexpVec(u));
    }

    /// w_{y,d}; d == feature_dim addresses the absorbed bias row.
    double head_weight(std::size_t d, int y) const {
        return params_[head_offset_ + d * cfg_.num_classes + std::size_t(y)];
    }

    // --- gradient engine ----------------------------------------------------

    double eval_loss(const std::vector<NllTerm>& terms) const {
        double loss = 0.0;
        for (const auto& t : terms) loss += t.coeff * (-log_q(*t.x, t.y));
        return loss;
    }

    GradientReport grad_loss(const std::vector<NllTerm>& terms) const {
        GradientReport rep;
        rep.grad.assign(params_.size(), 0.0);
        for (const auto& t : terms) rep.loss += t.coeff * backward_term(t, rep.grad);
        if (!std::isfinite(rep.loss) || !all_finite(rep.grad))
            throw NonFiniteGradient("gradient contains a non-finite component");
        return rep;
    }

    /// Central finite differences against the analytic gradient; fills
    /// finite_diff_max_rel_err. Mutates and restores parameters.
    GradientReport finite_diff_check(const std::vector<NllTerm>& terms, double step = 1e-5) {
        GradientReport rep = grad_loss(terms);
        double worst = 0.0;
        for (std::size_t i = 0; i < params_.size(); ++i) {
            const double saved = params_[i];
            params_[i] = saved + step;
            const double up = eval_loss(terms);
            params_[i] = saved - step;
            const double down = eval_loss(terms);
            params_[i] = saved;
            const double fd = (up - down) / (2.0 * step);
            const double denom = std::max({std::fabs(rep.grad[i]), std::fabs(fd), 1e-6});
            worst = std::max(worst, std::fabs(rep.grad[i] - fd) / denom);
        }
        rep.finite_diff_max_rel_err = worst;
        return rep;
    }

    // --- checkpoint ---------------------------------------------------------

    static constexpr char kMagic[13] = "augriskmodel";  // 12 bytes on disk
    static constexpr std::uint32_t kVersion = 1;

    void save_checkpoint(const std::filesystem::path& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw Error("cannot open " + path.string() + " for writing");
        os.write(kMagic, 12);
        write_u32_le(os, kVersion);
        write_u32_le(os, cfg_.activation == Activation::Tanh ? 0u : 1u);
        write_u32_le(os, std::uint32_t(dims_.size()));
        for (std::size_t d : dims_) write_u32_le(os, std::uint32_t(d));
        write_u32_le(os, std::uint32_t(cfg_.num_classes));
        write_u64_le(os, params_.size());
        for (double v : params_) write_f64_le(os, v);
    }

    static ProbModel load_checkpoint(const std::filesystem::path& path) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw Error("cannot open " + path.string());
        char magic[12];
        is.read(magic, 12);
        if (!is || std::string(magic, 12) != std::string(kMagic, 12))
            throw BadMagic("not a model checkpoint: " + path.string());
        const std::uint32_t version = read_u32_le(is);
        if (version != kVersion)
            throw BadMagic("unsupported checkpoint version " + std::to_string(version));
        ModelConfig cfg;
        cfg.activation = read_u32_le(is) == 0 ? Activation::Tanh : Activation::Softplus;
        const std::uint32_t ndims = read_u32_le(is);
        if (ndims < 2) throw BadMagic("checkpoint shape header is malformed");
        std::vector<std::size_t> dims(ndims);
        for (auto& d : dims) d = read_u32_le(is);
        cfg.input_dim = dims.front();
        cfg.feature_dim = dims.back();
        cfg.hidden.assign(dims.begin() + 1, dims.end() - 1);
        cfg.num_classes = read_u32_le(is);
        cfg.seed = 0;
        const std::uint64_t count = read_u64_le(is);
        ProbModel model(cfg);
        if (count != model.param_count())
            throw CountMismatch("checkpoint parameter count " + std::to_string(count) +
                                " does not match shape header " +
                                std::to_string(model.param_count()));
        for (auto& v : model.params_) v = read_f64_le(is);
        if (!is) throw TruncatedFile("checkpoint ends before the parameter block");
        return model;
    }

    // --- raw layer access (tests and diagnostics) ---------------------------

    std::size_t layer_weight_offset(std::size_t k) const { return w_offsets_[k]; }
    std::size_t layer_bias_offset(std::size_t k) const { return b_offsets_[k]; }
    std::size_t head_offset() const { return head_offset_; }
    const std::vector<std::size_t>& layer_dims() const { return dims_; }

private:
    void layout() {
        std::size_t off = 0;
        for (std::size_t k = 0; k + 1 < dims_.size(); ++k) {
            w_offsets_.push_back(off);
            off += dims_[k + 1] * dims_[k];
            b_offsets_.push_back(off);
            off += dims_[k + 1];
        }
        head_offset_ = off;
        off += (cfg_.feature_dim + 1) * cfg_.num_classes;
        params_.assign(off, 0.0);
        decay_mask_.assign(off, 0.0);
        for (std::size_t k = 0; k + 1 < dims_.size(); ++k)
            for (std::size_t i = 0; i < dims_[k + 1] * dims_[k]; ++i)
                decay_mask_[w_offsets_[k] + i] = 1.0;
        for (std::size_t d = 0; d < cfg_.feature_dim; ++d)
            for (std::size_t i = 0; i < cfg_.num_classes; ++i)
                decay_mask_[head_offset_ + d * cfg_.num_classes + i] = 1.0;
    }

    void init(std::uint64_t seed) {
        Rng rng(seed);
        for (std::size_t k = 0; k + 1 < dims_.size(); ++k) {
            const double bound = 1.0 / std::sqrt(double(dims_[k]));
            for (std::size_t i = 0; i < dims_[k + 1] * dims_[k]; ++i)
                params_[w_offsets_[k] + i] = rng.uniform(-bound, bound);
            for (std::size_t i = 0; i < dims_[k + 1]; ++i)
                params_[b_offsets_[k] + i] = rng.uniform(-bound, bound);
        }
        const double bound = 1.0 / std::sqrt(double(cfg_.feature_dim));
        for (std::size_t i = 0; i < (cfg_.feature_dim + 1) * cfg_.num_classes; ++i)
            params_[head_offset_ + i] = rng.uniform(-bound, bound);
    }

    static double logsumexpVec(const Vec& u) { return logsumexp(Span(u.data(), u.size())); }

    double act(double z) const {
        if (cfg_.activation == Activation::Tanh) return std::tanh(z);
        return std::fmax(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));  // softplus
    }

    // Derivative expressed through the post-activation value a = act(z):
    // tanh' = 1 - a^2; softplus' = sigmoid(z) = 1 - exp(-a).
    double act_deriv_from_output(double a) const {
        if (cfg_.activation == Activation::Tanh) return 1.0 - a * a;
        return 1.0 - std::exp(-a);
    }

    Vec layer_forward(std::size_t k, const Vec& in) const {
        const std::size_t rows = dims_[k + 1], cols = dims_[k];
        const double* w = params_.data() + w_offsets_[k];
        const double* b = params_.data() + b_offsets_[k];
        const bool last = (k + 2 == dims_.size());
        Vec out(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            double z = b[r];
            const double* wr = w + r * cols;
            for (std::size_t c = 0; c < cols; ++c) z += wr[c] * in[c];
            out[r] = last ? z : act(z);
        }
        return out;
    }

    Vec head_logits(const Vec& h) const {
        const std::size_t l = cfg_.num_classes, d_max = cfg_.feature_dim;
        const double* w = params_.data() + head_offset_;
        Vec u(l);
        for (std::size_t i = 0; i < l; ++i) {
            double z = w[d_max * l + i];  // absorbed bias feature
            for (std::size_t d = 0; d < d_max; ++d) z += w[d * l + i] * h[d];
            u[i] = z;
        }
        return u;
    }

    // Accumulates the gradient of -log q(y|x) scaled by coeff into grad;
    // returns the unscaled -log q value.
    double backward_term(const NllTerm& term, Vec& grad) const {
        const std::size_t layers = dims_.size() - 1;
        std::vector<Vec> acts(layers + 1);
        acts[0] = *term.x;
        for (std::size_t k = 0; k < layers; ++k) acts[k + 1] = layer_forward(k, acts[k]);
        const Vec& h = acts[layers];

        Vec u = head_logits(h);
        const double lse = logsumexpVec(u);
        const double value = lse - u[std::size_t(term.y)];

        const std::size_t l = cfg_.num_classes, d_max = cfg_.feature_dim;
        Vec du(l);
        for (std::size_t i = 0; i < l; ++i)
            du[i] = term.coeff * (std::exp(u[i] - lse) - (int(i) == term.y ? 1.0 : 0.0));

        double* ghead = grad.data() + head_offset_;
        const double* whead = params_.data() + head_offset_;
        Vec dh(d_max, 0.0);
        for (std::size_t d = 0; d < d_max; ++d) {
            for (std::size_t i = 0; i < l; ++i) {
                ghead[d * l + i] += du[i] * h[d];
                dh[d] += whead[d * l + i] * du[i];
            }
        }
        for (std::size_t i = 0; i < l; ++i) ghead[d_max * l + i] += du[i];

        // delta holds dLoss/dz for the current layer; the feature layer is
        // linear so no activation derivative applies there.
        Vec delta = std::move(dh);
        for (std::size_t k = layers; k-- > 0;) {
            const std::size_t rows = dims_[k + 1], cols = dims_[k];
            const double* w = params_.data() + w_offsets_[k];
            double* gw = grad.data() + w_offsets_[k];
            double* gb = grad.data() + b_offsets_[k];
            const Vec& in = acts[k];
            for (std::size_t r = 0; r < rows; ++r) {
                const double dr = delta[r];
                gb[r] += dr;
                double* gwr = gw + r * cols;
                for (std::size_t c = 0; c < cols; ++c) gwr[c] += dr * in[c];
            }
            if (k == 0) break;
            Vec prev(cols, 0.0);
            for (std::size_t r = 0; r < rows; ++r) {
                const double dr = delta[r];
                const double* wr = w + r * cols;
                for (std::size_t c = 0; c < cols; ++c) prev[c] += wr[c] * dr;
            }
            for (std::size_t c = 0; c < cols; ++c) prev[c] *= act_deriv_from_output(in[c]);
            delta = std::move(prev);
        }
        return value;
    }

    void check_class(int y) const {
        if (y < 0 || std::size_t(y) >= cfg_.num_classes)
            throw Error("class index " + std::to_string(y) + " out of range");
    }

    ModelConfig cfg_;
    std::vector<std::size_t> dims_;
    std::vector<std::size_t> w_offsets_, b_offsets_;
    std::size_t head_offset_ = 0;
    Vec params_;
    Vec decay_mask_;
};

}  // namespace augrisk
