// Copyright (c) 2026 augrisk contributors
// Licensed under the Apache License, Version 2.0.

/**
 * @file data.hpp
 * @brief Synthetic dataset generators with exact labeling oracles, long-tail
 *        subsampling, IDX ingestion and stratified splits.
 */

#pragma once

#include "augrisk/cansample.hpp"
#include "augrisk/core.hpp"
#include "augrisk/io.hpp"

namespace augrisk {

struct Dataset {
    std::vector<Sample> samples;
    int num_classes = 0;
    Vec domain_lower, domain_upper;
    ConceptionOracle oracle;
    std::size_t image_rows = 0, image_cols = 0;  // nonzero only for IDX data

    std::size_t size() const { return samples.size(); }
    std::size_t dim() const { return samples.empty() ? 0 : samples[0].x.size(); }

    std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> counts(std::size_t(num_classes), 0);
        for (const auto& s : samples) counts[std::size_t(s.y)]++;
        return counts;
    }

    void assert_consistent() const {
        for (std::size_t i = 0; i < samples.size(); ++i)
            if (oracle(samples[i].x) != samples[i].y)
                throw Error("dataset: oracle disagrees with stored label at index " +
                            std::to_string(i));
    }
};

namespace detail {

inline void fit_domain_bounds(Dataset& d, double margin = 0.1) {
    if (d.samples.empty()) return;
    const std::size_t dim = d.dim();
    d.domain_lower.assign(dim, std::numeric_limits<double>::infinity());
    d.domain_upper.assign(dim, -std::numeric_limits<double>::infinity());
    for (const auto& s : d.samples)
        for (std::size_t k = 0; k < dim; ++k) {
            d.domain_lower[k] = std::min(d.domain_lower[k], s.x[k]);
            d.domain_upper[k] = std::max(d.domain_upper[k], s.x[k]);
        }
    for (std::size_t k = 0; k < dim; ++k) {
        const double pad = margin * std::max(1.0, d.domain_upper[k] - d.domain_lower[k]);
        d.domain_lower[k] -= pad;
        d.domain_upper[k] += pad;
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Gaussian blobs with a nearest-center oracle. Centers sit on a circle of
// radius `separation` in the first two coordinates; samples are redrawn until
// the oracle agrees with the generating class, so labels stay balanced and
// oracle-consistent by construction. With k = 2 the centers are mirrored
// across the vertical axis and the oracle reduces to the sign of the first
// coordinate (the half-plane configuration).
// ---------------------------------------------------------------------------

inline Dataset gen_blobs(int k, std::size_t dim, std::size_t per_class, double separation,
                         std::uint64_t seed) {
    if (k < 2) throw Error("gen_blobs: need at least 2 classes");
    if (dim < 2) throw Error("gen_blobs: need dimension >= 2");
    if (!(separation > 0.0)) throw Error("gen_blobs: separation must be positive");

    auto centers = std::make_shared<std::vector<Vec>>();
    for (int c = 0; c < k; ++c) {
        Vec center(dim, 0.0);
        const double angle = 2.0 * M_PI * double(c) / double(k);
        center[0] = separation * std::cos(angle);
        center[1] = separation * std::sin(angle);
        centers->push_back(std::move(center));
    }

    Dataset d;
    d.num_classes = k;
    d.oracle.num_classes = k;
    d.oracle.labeler = [centers](const Vec& x) {
        int best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centers->size(); ++c) {
            double dist = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double diff = x[i] - (*centers)[c][i];
                dist += diff * diff;
            }
            if (dist < best_dist) {
                best_dist = dist;
                best = int(c);
            }
        }
        return best;
    };

    Rng rng(seed);
    for (int c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            Vec x(dim);
            do {
                for (std::size_t j = 0; j < dim; ++j)
                    x[j] = (*centers)[std::size_t(c)][j] + rng.normal();
            } while (d.oracle(x) != c);
            d.samples.push_back({std::move(x), c});
        }
    }
    detail::fit_domain_bounds(d);
    d.assert_consistent();
    return d;
}

// ---------------------------------------------------------------------------
// Concentric rings with a radial-band oracle: class c occupies radii
// [c + 0.1, c + 0.9], so any planar rotation keeps the label and the rotation
// acceptance rate is exactly 1.
// ---------------------------------------------------------------------------

inline Dataset gen_rings(int k, std::size_t per_class, std::uint64_t seed) {
    if (k < 2) throw Error("gen_rings: need at least 2 classes");
    Dataset d;
    d.num_classes = k;
    d.oracle.num_classes = k;
    d.oracle.labeler = [k](const Vec& x) {
        const double r = norm2(x);
        return std::min(k - 1, std::max(0, int(std::floor(r))));
    };
    Rng rng(seed);
    for (int c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            const double r = rng.uniform(double(c) + 0.1, double(c) + 0.9);
            const double phi = rng.uniform(-M_PI, M_PI);
            d.samples.push_back({{r * std::cos(phi), r * std::sin(phi)}, c});
        }
    }
    detail::fit_domain_bounds(d);
    d.assert_consistent();
    return d;
}

// ---------------------------------------------------------------------------
// Long-tail subsampling: class i keeps floor(n_max * ratio^(-i/(l-1)))
// samples, which makes the max/min count ratio equal the configured ratio up
// to rounding. Kept samples are a seeded random subset of each class.
// ---------------------------------------------------------------------------

inline Dataset longtail_subsample(const Dataset& in, double ratio, std::uint64_t seed) {
    if (!(ratio >= 1.0)) throw Error("longtail_subsample: imbalance ratio must be >= 1");
    const int l = in.num_classes;
    if (l < 2) throw Error("longtail_subsample: need at least 2 classes");

    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(l));
    for (std::size_t i = 0; i < in.samples.size(); ++i)
        by_class[std::size_t(in.samples[i].y)].push_back(i);
    std::size_t n_max = 0;
    for (const auto& idx : by_class) n_max = std::max(n_max, idx.size());

    Dataset out = in;
    out.samples.clear();
    for (int c = 0; c < l; ++c) {
        const double target = double(n_max) * std::pow(ratio, -double(c) / double(l - 1));
        const std::size_t keep =
            std::min(by_class[std::size_t(c)].size(), std::size_t(std::floor(target)));
        if (keep == 0)
            throw EmptyClass("longtail_subsample: class " + std::to_string(c) +
                             " would be emptied (target " + std::to_string(target) + ")");
        auto idx = by_class[std::size_t(c)];
        Rng rng(Rng::derive(seed, std::uint64_t(c)));
        rng.shuffle(idx);
        idx.resize(keep);
        std::sort(idx.begin(), idx.end());
        for (std::size_t i : idx) out.samples.push_back(in.samples[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// IDX ingestion (MNIST container format). Big-endian headers, magic
// 0x00000803 for images and 0x00000801 for labels. Pixels are scaled to
// [1e-6, 1] so that every downstream positive-domain operator is applicable.
// The oracle for ingested data is the nearest stored sample's label.
// ---------------------------------------------------------------------------

inline Dataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw Error("cannot open " + images_path.string());
    std::ifstream lbl(labels_path, std::ios::binary);
    if (!lbl) throw Error("cannot open " + labels_path.string());

    const std::uint32_t img_magic = read_u32_be(img);
    if (img_magic != 0x00000803u)
        throw BadMagic("image file magic " + std::to_string(img_magic) + " != 2051");
    const std::uint32_t lbl_magic = read_u32_be(lbl);
    if (lbl_magic != 0x00000801u)
        throw BadMagic("label file magic " + std::to_string(lbl_magic) + " != 2049");

    const std::uint32_t n_images = read_u32_be(img);
    const std::uint32_t rows = read_u32_be(img);
    const std::uint32_t cols = read_u32_be(img);
    const std::uint32_t n_labels = read_u32_be(lbl);
    if (n_images != n_labels)
        throw CountMismatch("image count " + std::to_string(n_images) + " != label count " +
                            std::to_string(n_labels));

    Dataset d;
    d.image_rows = rows;
    d.image_cols = cols;
    const std::size_t pixels = std::size_t(rows) * cols;
    std::vector<unsigned char> buf(pixels);
    int max_label = 0;
    for (std::uint32_t i = 0; i < n_images; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()), std::streamsize(pixels));
        if (!img) throw TruncatedFile("image file ends inside image " + std::to_string(i));
        char lab = 0;
        lbl.read(&lab, 1);
        if (!lbl) throw TruncatedFile("label file ends at label " + std::to_string(i));
        Vec x(pixels);
        for (std::size_t p = 0; p < pixels; ++p)
            x[p] = std::max(double(buf[p]) / 255.0, 1e-6);
        const int y = int(static_cast<unsigned char>(lab));
        max_label = std::max(max_label, y);
        d.samples.push_back({std::move(x), y});
    }
    d.num_classes = max_label + 1;
    d.oracle.num_classes = d.num_classes;

    // 1-NN lookup oracle over the ingested samples (exact match included).
    auto table = std::make_shared<std::vector<Sample>>(d.samples);
    d.oracle.labeler = [table](const Vec& x) {
        int best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (const auto& s : *table) {
            double dist = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double diff = x[i] - s.x[i];
                dist += diff * diff;
            }
            if (dist < best_dist) {
                best_dist = dist;
                best = s.y;
            }
        }
        return best;
    };
    detail::fit_domain_bounds(d);
    d.assert_consistent();
    return d;
}

inline void write_idx(const Dataset& d, const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path) {
    if (d.image_rows == 0 || d.image_cols == 0)
        throw Error("write_idx: dataset has no image geometry");
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw Error("cannot open " + images_path.string() + " for writing");
    std::ofstream lbl(labels_path, std::ios::binary);
    if (!lbl) throw Error("cannot open " + labels_path.string() + " for writing");

    write_u32_be(img, 0x00000803u);
    write_u32_be(img, std::uint32_t(d.samples.size()));
    write_u32_be(img, std::uint32_t(d.image_rows));
    write_u32_be(img, std::uint32_t(d.image_cols));
    write_u32_be(lbl, 0x00000801u);
    write_u32_be(lbl, std::uint32_t(d.samples.size()));
    for (const auto& s : d.samples) {
        for (double v : s.x) {
            const double byte = std::round(v * 255.0);
            img.put(char(static_cast<unsigned char>(std::clamp(byte, 0.0, 255.0))));
        }
        lbl.put(char(static_cast<unsigned char>(s.y)));
    }
}

// ---------------------------------------------------------------------------
// Class-stratified splits.
// ---------------------------------------------------------------------------

struct SplitSpec {
    double train_frac = 0.8;
    double val_frac = 0.1;
    double test_frac = 0.1;
    std::uint64_t seed = 0;

    void validate() const {
        if (train_frac < 0 || val_frac < 0 || test_frac < 0)
            throw ConfigError("split: fractions must be nonnegative");
        if (train_frac + val_frac + test_frac > 1.0 + 1e-12)
            throw ConfigError("split: fractions sum above 1");
    }
};

struct Splits {
    Dataset train, val, test;
};

/// Deterministic per-class partition. val and test take floor(frac * n_c)
/// samples of each class; the remainder goes to train so the union equals the
/// input dataset.
inline Splits split(const Dataset& d, const SplitSpec& spec) {
    spec.validate();
    Splits out;
    out.train = out.val = out.test = Dataset{{},
                                             d.num_classes,
                                             d.domain_lower,
                                             d.domain_upper,
                                             d.oracle,
                                             d.image_rows,
                                             d.image_cols};
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(d.num_classes));
    for (std::size_t i = 0; i < d.samples.size(); ++i)
        by_class[std::size_t(d.samples[i].y)].push_back(i);
    for (int c = 0; c < d.num_classes; ++c) {
        auto idx = by_class[std::size_t(c)];
        Rng rng(Rng::derive(spec.seed, std::uint64_t(c)));
        rng.shuffle(idx);
        const std::size_t n = idx.size();
        const std::size_t n_val = std::size_t(std::floor(spec.val_frac * double(n)));
        const std::size_t n_test = std::size_t(std::floor(spec.test_frac * double(n)));
        const std::size_t n_train = n - n_val - n_test;
        for (std::size_t i = 0; i < n; ++i) {
            const Sample& s = d.samples[idx[i]];
            if (i < n_train)
                out.train.samples.push_back(s);
            else if (i < n_train + n_val)
                out.val.samples.push_back(s);
            else
                out.test.samples.push_back(s);
        }
    }
    return out;
}

/// CSV export with header x0,...,x{d-1},y.
inline void export_csv(const Dataset& d, const std::filesystem::path& path) {
    std::vector<std::string> header;
    for (std::size_t i = 0; i < d.dim(); ++i) header.push_back("x" + std::to_string(i));
    header.push_back("y");
    CsvWriter csv(header);
    for (const auto& s : d.samples) {
        std::vector<std::string> row;
        for (double v : s.x) row.push_back(fmt_double(v));
        row.push_back(std::to_string(s.y));
        csv.add_row(row);
    }
    csv.save(path);
}

}  // namespace augrisk
