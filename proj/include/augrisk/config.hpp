// Copyright (c) 2026 augrisk contributors
// Licensed under the Apache License, Version 2.0.

/**
 * @file config.hpp
 * @brief Experiment configuration: a flat, typed key-value format with
 *        [section] headers. Parsing is total: every key must be consumed by
 *        a known reader or loading fails with a file:line anchored error.
 */

#pragma once

#include <map>
#include <set>

#include "augrisk/augment.hpp"
#include "augrisk/cansample.hpp"
#include "augrisk/data.hpp"
#include "augrisk/io.hpp"
#include "augrisk/train.hpp"

namespace augrisk {

// ---------------------------------------------------------------------------
// Raw file: sections of key/value pairs with line tracking.
// ---------------------------------------------------------------------------

class ConfigFile {
public:
    struct Entry {
        std::string value;
        int line = 0;
        mutable bool consumed = false;
    };

    static ConfigFile parse_text(const std::string& text, const std::string& origin) {
        ConfigFile cf;
        cf.origin_ = origin;
        std::istringstream is(text);
        std::string raw;
        std::string section;
        int line_no = 0;
        while (std::getline(is, raw)) {
            ++line_no;
            std::string line = strip_comment(raw);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError(cf.at(line_no) + "unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                if (section.empty()) throw ConfigError(cf.at(line_no) + "empty section name");
                cf.sections_[section];  // sections may be empty
                cf.section_lines_[section] = line_no;
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(cf.at(line_no) + "expected 'key = value'");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) throw ConfigError(cf.at(line_no) + "empty key");
            if (section.empty())
                throw ConfigError(cf.at(line_no) + "key '" + key + "' before any [section]");
            auto& sec = cf.sections_[section];
            if (sec.count(key))
                throw ConfigError(cf.at(line_no) + "duplicate key '" + key + "' in [" + section +
                                  "]");
            sec[key] = Entry{value, line_no, false};
        }
        return cf;
    }

    static ConfigFile load(const std::filesystem::path& path) {
        return parse_text(read_file_bytes(path), path.string());
    }

    bool has_section(const std::string& s) const { return sections_.count(s) > 0; }

    std::vector<std::string> section_names() const {
        std::vector<std::string> names;
        for (const auto& [name, _] : sections_) names.push_back(name);
        return names;
    }

    bool has(const std::string& section, const std::string& key) const {
        auto it = sections_.find(section);
        return it != sections_.end() && it->second.count(key) > 0;
    }

    const Entry& entry(const std::string& section, const std::string& key) const {
        auto it = sections_.find(section);
        if (it == sections_.end())
            throw ConfigError(origin_ + ": missing required section [" + section + "]");
        auto kt = it->second.find(key);
        if (kt == it->second.end())
            throw ConfigError(origin_ + ":" + std::to_string(section_line(section)) +
                              ": missing required key '" + key + "' in [" + section + "]");
        kt->second.consumed = true;
        return kt->second;
    }

    std::string get_string(const std::string& section, const std::string& key) const {
        return entry(section, key).value;
    }

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
        return has(section, key) ? entry(section, key).value : fallback;
    }

    double get_real(const std::string& section, const std::string& key) const {
        const Entry& e = entry(section, key);
        return parse_real(e.value, e.line, section, key);
    }

    double get_real(const std::string& section, const std::string& key, double fallback) const {
        return has(section, key) ? get_real(section, key) : fallback;
    }

    long long get_int(const std::string& section, const std::string& key) const {
        const Entry& e = entry(section, key);
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(e.value, &pos);
            if (pos != e.value.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(at(e.line) + "key '" + key + "' in [" + section +
                              "] is not an integer: '" + e.value + "'");
        }
    }

    long long get_int(const std::string& section, const std::string& key,
                      long long fallback) const {
        return has(section, key) ? get_int(section, key) : fallback;
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        const Entry& e = entry(section, key);
        if (e.value == "true" || e.value == "1") return true;
        if (e.value == "false" || e.value == "0") return false;
        throw ConfigError(at(e.line) + "key '" + key + "' in [" + section +
                          "] is not a boolean: '" + e.value + "'");
    }

    /// Space-separated real vector.
    Vec get_vec(const std::string& section, const std::string& key) const {
        const Entry& e = entry(section, key);
        Vec out;
        std::istringstream is(e.value);
        std::string tok;
        while (is >> tok) out.push_back(parse_real(tok, e.line, section, key));
        if (out.empty())
            throw ConfigError(at(e.line) + "key '" + key + "' in [" + section + "] is empty");
        return out;
    }

    std::vector<std::string> get_words(const std::string& section, const std::string& key) const {
        const Entry& e = entry(section, key);
        std::vector<std::string> out;
        std::istringstream is(e.value);
        std::string tok;
        while (is >> tok) out.push_back(tok);
        if (out.empty())
            throw ConfigError(at(e.line) + "key '" + key + "' in [" + section + "] is empty");
        return out;
    }

    /// Rejects unconsumed keys and unexpected sections.
    void finish(const std::set<std::string>& known_sections) const {
        for (const auto& [name, entries] : sections_) {
            if (!known_sections.count(name))
                throw ConfigError(origin_ + ":" + std::to_string(section_line(name)) +
                                  ": unknown section [" + name + "]");
            for (const auto& [key, e] : entries)
                if (!e.consumed)
                    throw ConfigError(at(e.line) + "unknown key '" + key + "' in [" + name + "]");
        }
    }

    /// Canonical serialization: sections and keys in sorted order, values
    /// verbatim. The basis for config hashing and snapshots.
    std::string canonical_text() const {
        std::string out;
        for (const auto& [name, entries] : sections_) {
            out += "[" + name + "]\n";
            for (const auto& [key, e] : entries) out += key + " = " + e.value + "\n";
        }
        return out;
    }

    const std::string& origin() const { return origin_; }

private:
    std::string at(int line) const { return origin_ + ":" + std::to_string(line) + ": "; }

    int section_line(const std::string& section) const {
        auto it = section_lines_.find(section);
        return it == section_lines_.end() ? 0 : it->second;
    }

    double parse_real(const std::string& tok, int line, const std::string& section,
                      const std::string& key) const {
        try {
            std::size_t pos = 0;
            const double v = std::stod(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(at(line) + "key '" + key + "' in [" + section +
                              "] is not a number: '" + tok + "'");
        }
    }

    static std::string strip_comment(const std::string& s) {
        const auto pos = s.find('#');
        return pos == std::string::npos ? s : s.substr(0, pos);
    }

    static std::string trim(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    std::string origin_;
    std::map<std::string, std::map<std::string, Entry>> sections_;
    std::map<std::string, int> section_lines_;
};

// ---------------------------------------------------------------------------
// Experiment assembly.
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    // dataset
    std::string dataset_kind;  // blobs | rings | idx
    int classes = 2;
    std::size_t per_class = 100;
    std::size_t blob_dim = 2;
    double separation = 3.0;
    std::uint64_t dataset_seed = 11;
    std::string idx_images, idx_labels;
    bool longtail = false;
    double longtail_ratio = 10.0;
    std::uint64_t longtail_seed = 0;
    SplitSpec split_spec;

    // augmentation
    struct OpSpec {
        std::string label;  // section suffix
        std::string kind;   // rotation2d | additive_shift | scale | color_adjust | discrete_flip
        Vec lower, upper;
        std::string prior = "uniform";  // uniform | gaussian | finite
        Vec prior_mean, prior_std;
        std::vector<Vec> prior_atoms;
        std::size_t channels = 1;  // color_adjust
    };
    std::vector<OpSpec> ops;
    int max_attempts = 1000;
    bool fallback = true;

    // model
    ModelConfig model;

    // train
    TrainConfig train_cfg;

    // ablate
    Vec ablate_lambdas = {0.0001, 0.1, 0.5, 1.0};
    std::vector<std::uint64_t> ablate_seeds = {1, 2, 3, 4, 5};

    // variance scan
    std::size_t scan_n = 32;
    std::vector<std::size_t> scan_m_list = {1, 2, 4, 8, 16};
    std::size_t scan_trials = 1000;

    // output
    std::string out_dir = "out";

    std::string canonical_text;  // snapshot of the parsed file

    // --- builders -----------------------------------------------------------

    Dataset build_dataset() const {
        Dataset d;
        if (dataset_kind == "blobs") {
            d = gen_blobs(classes, blob_dim, per_class, separation, dataset_seed);
        } else if (dataset_kind == "rings") {
            d = gen_rings(classes, per_class, dataset_seed);
        } else if (dataset_kind == "idx") {
            d = load_idx(idx_images, idx_labels);
        } else {
            throw ConfigError("dataset kind '" + dataset_kind + "' is not one of blobs|rings|idx");
        }
        if (longtail) d = longtail_subsample(d, longtail_ratio, longtail_seed);
        return d;
    }

    OpPtr build_operator() const {
        std::vector<OpPtr> built;
        for (const auto& spec : ops) built.push_back(build_one(spec));
        if (built.size() == 1) return built[0];
        return compose(std::move(built));
    }

    ParamPrior build_prior() const {
        std::vector<ParamPrior> parts;
        for (const auto& spec : ops) parts.push_back(build_one_prior(spec));
        if (parts.size() == 1) return parts[0];
        return ParamPrior::product(std::move(parts));
    }

    SampleOptions sample_options(unsigned workers = 1) const {
        SampleOptions o;
        o.max_attempts = max_attempts;
        o.fallback_to_identity = fallback;
        o.workers = workers;
        return o;
    }

    // --- loading -------------------------------------------------------------

    static ExperimentConfig load(const std::filesystem::path& path) {
        return from_file(ConfigFile::load(path));
    }

    static ExperimentConfig from_file(const ConfigFile& cf) {
        ExperimentConfig ec;
        ec.canonical_text = cf.canonical_text();

        ec.dataset_kind = cf.get_string("dataset", "kind");
        if (ec.dataset_kind == "blobs" || ec.dataset_kind == "rings") {
            ec.classes = int(cf.get_int("dataset", "classes", 2));
            ec.per_class = std::size_t(cf.get_int("dataset", "per_class", 100));
            ec.dataset_seed = std::uint64_t(cf.get_int("dataset", "seed", 11));
            if (ec.dataset_kind == "blobs") {
                ec.blob_dim = std::size_t(cf.get_int("dataset", "dim", 2));
                ec.separation = cf.get_real("dataset", "separation", 3.0);
            }
        } else if (ec.dataset_kind == "idx") {
            ec.idx_images = cf.get_string("dataset", "images");
            ec.idx_labels = cf.get_string("dataset", "labels");
        } else {
            throw ConfigError(cf.origin() + ": [dataset] kind '" + ec.dataset_kind +
                              "' is not one of blobs|rings|idx");
        }

        if (cf.has_section("longtail")) {
            ec.longtail = true;
            ec.longtail_ratio = cf.get_real("longtail", "ratio");
            ec.longtail_seed = std::uint64_t(cf.get_int("longtail", "seed", 0));
        }

        if (cf.has_section("split")) {
            ec.split_spec.train_frac = cf.get_real("split", "train", 0.8);
            ec.split_spec.val_frac = cf.get_real("split", "val", 0.1);
            ec.split_spec.test_frac = cf.get_real("split", "test", 0.1);
            ec.split_spec.seed = std::uint64_t(cf.get_int("split", "seed", 0));
            ec.split_spec.validate();
        }

        std::set<std::string> known = {"dataset", "longtail", "split", "augment",
                                       "model",   "train",    "ablate", "scan",
                                       "output"};

        for (const auto& label : cf.get_words("augment", "ops")) {
            const std::string section = "augment." + label;
            known.insert(section);
            OpSpec spec;
            spec.label = label;
            spec.kind = cf.get_string(section, "kind");
            if (cf.has(section, "lower")) spec.lower = cf.get_vec(section, "lower");
            if (cf.has(section, "upper")) spec.upper = cf.get_vec(section, "upper");
            if (spec.lower.size() != spec.upper.size())
                throw ConfigError(cf.origin() + ": [" + section +
                                  "] lower and upper must have equal lengths");
            for (std::size_t k = 0; k < spec.lower.size(); ++k)
                if (!(spec.lower[k] < spec.upper[k]))
                    throw ConfigError(cf.origin() + ": [" + section + "] lower[" +
                                      std::to_string(k) + "] must be strictly below upper[" +
                                      std::to_string(k) + "]");
            spec.prior = cf.get_string(section, "prior", "uniform");
            if (spec.prior == "gaussian") {
                spec.prior_mean = cf.get_vec(section, "prior_mean");
                spec.prior_std = cf.get_vec(section, "prior_std");
            } else if (spec.prior == "finite") {
                for (const auto& atom : split_atoms(cf.get_string(section, "prior_atoms"), cf,
                                                    section))
                    spec.prior_atoms.push_back(atom);
            } else if (spec.prior != "uniform") {
                throw ConfigError(cf.origin() + ": [" + section + "] prior '" + spec.prior +
                                  "' is not one of uniform|gaussian|finite");
            }
            spec.channels = std::size_t(cf.get_int(section, "channels", 1));
            if (cf.has(section, "identity")) {
                const Vec id = cf.get_vec(section, "identity");
                const Vec canonical = canonical_identity(spec);
                if (id.size() != canonical.size() || max_abs_diff(id, canonical) != 0.0)
                    throw ConfigError(cf.origin() + ": [" + section +
                                      "] identity does not match the operator's identity element");
            }
            ec.ops.push_back(std::move(spec));
        }
        ec.max_attempts = int(cf.get_int("augment", "max_attempts", 1000));
        ec.fallback = cf.get_bool("augment", "fallback", true);

        if (cf.has_section("model")) {
            if (cf.has("model", "hidden")) {
                ec.model.hidden.clear();
                for (double w : cf.get_vec("model", "hidden"))
                    ec.model.hidden.push_back(std::size_t(w));
            }
            ec.model.feature_dim = std::size_t(cf.get_int("model", "features", 8));
            const std::string act = cf.get_string("model", "activation", "tanh");
            if (act == "tanh")
                ec.model.activation = Activation::Tanh;
            else if (act == "softplus")
                ec.model.activation = Activation::Softplus;
            else
                throw ConfigError(cf.origin() + ": [model] activation '" + act +
                                  "' is not one of tanh|softplus");
            ec.model.seed = std::uint64_t(cf.get_int("model", "seed", 21));
        }

        if (cf.has_section("train")) {
            const std::string strat = cf.get_string("train", "strategy", "standard");
            if (strat == "standard")
                ec.train_cfg.strategy = Strategy::Standard;
            else if (strat == "ours")
                ec.train_cfg.strategy = Strategy::Ours;
            else
                throw ConfigError(cf.origin() + ": [train] strategy '" + strat +
                                  "' is not one of standard|ours");
            ec.train_cfg.lambda = cf.get_real("train", "lambda", 0.5);
            ec.train_cfg.batch_size = std::size_t(cf.get_int("train", "batch_size", 32));
            ec.train_cfg.epochs = std::size_t(cf.get_int("train", "epochs", 10));
            ec.train_cfg.base_lr = cf.get_real("train", "base_lr", 0.1);
            ec.train_cfg.momentum = cf.get_real("train", "momentum", 0.9);
            ec.train_cfg.weight_decay = cf.get_real("train", "weight_decay", 5e-4);
            ec.train_cfg.warmup_epochs = std::size_t(cf.get_int("train", "warmup_epochs", 0));
            const std::string sched = cf.get_string("train", "schedule", "cosine");
            if (sched == "cosine") {
                ec.train_cfg.schedule = SchedKind::Cosine;
            } else if (sched == "step") {
                ec.train_cfg.schedule = SchedKind::Step;
                if (cf.has("train", "milestones"))
                    for (double m : cf.get_vec("train", "milestones"))
                        ec.train_cfg.milestones.push_back(std::size_t(m));
                ec.train_cfg.step_factor = cf.get_real("train", "step_factor", 0.1);
            } else {
                throw ConfigError(cf.origin() + ": [train] schedule '" + sched +
                                  "' is not one of cosine|step");
            }
            ec.train_cfg.seed = std::uint64_t(cf.get_int("train", "seed", 1));
            ec.train_cfg.m_copies = std::size_t(cf.get_int("train", "m_copies", 1));
            ec.train_cfg.double_batch = cf.get_bool("train", "double_batch", false);
            ec.train_cfg.max_attempts = ec.max_attempts;
            ec.train_cfg.fallback_to_identity = ec.fallback;
            ec.train_cfg.validate();
        }

        if (cf.has_section("ablate")) {
            ec.ablate_lambdas = cf.get_vec("ablate", "lambdas");
            ec.ablate_seeds.clear();
            for (double s : cf.get_vec("ablate", "seeds"))
                ec.ablate_seeds.push_back(std::uint64_t(s));
        }

        if (cf.has_section("scan")) {
            ec.scan_n = std::size_t(cf.get_int("scan", "n", 32));
            if (cf.has("scan", "m_list")) {
                ec.scan_m_list.clear();
                for (double m : cf.get_vec("scan", "m_list"))
                    ec.scan_m_list.push_back(std::size_t(m));
            }
            ec.scan_trials = std::size_t(cf.get_int("scan", "trials", 1000));
        }

        if (cf.has_section("output")) ec.out_dir = cf.get_string("output", "dir", "out");

        cf.finish(known);
        return ec;
    }

private:
    static std::vector<Vec> split_atoms(const std::string& text, const ConfigFile& cf,
                                        const std::string& section) {
        std::vector<Vec> atoms;
        std::string chunk;
        std::istringstream is(text);
        while (std::getline(is, chunk, ';')) {
            Vec atom;
            std::istringstream ws(chunk);
            double v;
            while (ws >> v) atom.push_back(v);
            if (!atom.empty()) atoms.push_back(std::move(atom));
        }
        if (atoms.empty())
            throw ConfigError(cf.origin() + ": [" + section + "] prior_atoms is empty");
        return atoms;
    }

    static Vec canonical_identity(const OpSpec& spec) {
        if (spec.kind == "rotation2d" || spec.kind == "scale" || spec.kind == "discrete_flip")
            return {0.0};
        if (spec.kind == "additive_shift") return Vec(spec.lower.size(), 0.0);
        if (spec.kind == "color_adjust") {
            Vec e;
            for (std::size_t c = 0; c < spec.channels; ++c) e.insert(e.end(), {0.0, 0.0, 1.0});
            return e;
        }
        throw ConfigError("operator kind '" + spec.kind + "' is not recognized");
    }

    static OpPtr build_one(const OpSpec& spec) {
        if (spec.kind == "rotation2d") {
            const double lo = spec.lower.empty() ? -M_PI : spec.lower[0];
            const double hi = spec.upper.empty() ? M_PI : spec.upper[0];
            return std::make_shared<Rotation2D>(lo, hi);
        }
        if (spec.kind == "additive_shift") {
            if (spec.lower.empty() || spec.upper.empty())
                throw ConfigError("augment." + spec.label +
                                  ": additive_shift requires lower and upper");
            return std::make_shared<AdditiveShift>(spec.lower, spec.upper);
        }
        if (spec.kind == "scale") {
            const double bound = spec.upper.empty() ? 0.5 : spec.upper[0];
            auto op = std::make_shared<Scale>(bound);
            if (!spec.lower.empty() && spec.lower[0] != -bound)
                throw ConfigError("augment." + spec.label + ": scale box must be symmetric");
            return op;
        }
        if (spec.kind == "color_adjust") return std::make_shared<ColorAdjust>(spec.channels);
        if (spec.kind == "discrete_flip") return std::make_shared<DiscreteFlip>();
        throw ConfigError("augment." + spec.label + ": kind '" + spec.kind +
                          "' is not recognized");
    }

    static ParamPrior build_one_prior(const OpSpec& spec) {
        const OpPtr op = build_one(spec);
        // Flip parameters live on {0, 1} with counting measure; a box prior
        // would draw interior points the operator rejects.
        if (spec.kind == "discrete_flip" && spec.prior != "finite")
            return ParamPrior::finite({{0.0}, {1.0}});
        ParamSpace box = op->space();
        if (!spec.lower.empty() && !spec.upper.empty() && spec.kind != "discrete_flip") {
            if (spec.lower.size() != box.dims() || spec.upper.size() != box.dims())
                throw ConfigError("augment." + spec.label + ": box bounds have dimension " +
                                  std::to_string(spec.lower.size()) + ", operator expects " +
                                  std::to_string(box.dims()));
            box.lower = spec.lower;
            box.upper = spec.upper;
            box.validate("augment." + spec.label);
        }
        if (spec.prior == "uniform") return ParamPrior::uniform(box);
        if (spec.prior == "gaussian")
            return ParamPrior::truncated_gaussian(spec.prior_mean, spec.prior_std, box);
        return ParamPrior::finite(spec.prior_atoms);
    }
};

/// FNV-1a hash of the canonical config text; names run directories.
inline std::string config_hash(const std::string& canonical_text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical_text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace augrisk
