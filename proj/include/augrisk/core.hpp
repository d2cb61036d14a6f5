// Copyright (c) 2026 augrisk contributors
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace augrisk {

using Vec = std::vector<double>;
using Span = std::span<const double>;

struct Sample {
    Vec x;
    int y = 0;
};

// ---------------------------------------------------------------------------
// Error types. One exception class per named failure mode.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParamOutOfRange : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct NotDifferentiable : Error { using Error::Error; };
struct SingularJacobian : Error { using Error::Error; };
struct NotInImage : Error { using Error::Error; };
struct NoInverse : Error { using Error::Error; };
struct EmptyComposition : Error { using Error::Error; };
struct RaggedGroups : Error { using Error::Error; };
struct NonFiniteGradient : Error { using Error::Error; };
struct DegenerateBounds : Error { using Error::Error; };
struct BadMagic : Error { using Error::Error; };
struct CountMismatch : Error { using Error::Error; };
struct TruncatedFile : Error { using Error::Error; };
struct EmptyClass : Error { using Error::Error; };

struct AcceptanceExhausted : Error {
    explicit AcceptanceExhausted(const std::string& msg, std::size_t index = 0)
        : Error(msg), sample_index(index) {}
    std::size_t sample_index;
};

struct NonFiniteLoss : Error {
    explicit NonFiniteLoss(const std::string& msg, std::size_t at_step = 0)
        : Error(msg), step(at_step) {}
    std::size_t step;
};

struct ConfigError : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Deterministic random stream. mt19937_64 with explicit bit-to-double
// conversion so draws do not depend on the standard library's distribution
// implementations.
// ---------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; draws two uniforms per call.
    double normal() {
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    std::size_t below(std::size_t n) { return std::size_t(engine_() % n); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

    // SplitMix64-style stream derivation: child streams are independent of
    // the draw history of the parent and of each other.
    static std::uint64_t derive(std::uint64_t master, std::uint64_t stream) {
        std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Small vector / numeric helpers.
// ---------------------------------------------------------------------------

inline double dot(Span a, Span b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(Span a) { return std::sqrt(dot(a, a)); }

inline double max_abs_diff(Span a, Span b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

inline bool all_finite(Span a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

inline double logsumexp(Span z) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : z) m = std::max(m, v);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    return m + std::log(s);
}

inline double mean(Span v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

inline double sample_variance(Span v) {
    if (v.size() < 2) return 0.0;
    double m = mean(v), s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / double(v.size() - 1);
}

// Cholesky-based determinant of the Gram matrix of `cols` (each an n-vector).
// Returns det(C^T C); 0 is reported through the caller's underflow check.
inline double gram_det(const std::vector<Vec>& cols) {
    const std::size_t d = cols.size();
    std::vector<double> g(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j)
            g[i * d + j] = g[j * d + i] = dot(cols[i], cols[j]);
    // LL^T factorization; Gram matrices are symmetric positive semidefinite.
    double det = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
        double diag = g[i * d + i];
        for (std::size_t k = 0; k < i; ++k) diag -= g[i * d + k] * g[i * d + k];
        if (!(diag > 0.0)) return 0.0;
        det *= diag;
        const double l = std::sqrt(diag);
        g[i * d + i] = l;
        for (std::size_t j = i + 1; j < d; ++j) {
            double v = g[j * d + i];
            for (std::size_t k = 0; k < i; ++k) v -= g[j * d + k] * g[i * d + k];
            g[j * d + i] = v / l;
        }
    }
    return det;
}

// Runs fn(0..n-1) on `workers` threads. Each index must touch disjoint state;
// results are then independent of the schedule. The first exception thrown by
// any worker is rethrown on the calling thread.
inline void parallel_for(std::size_t n, unsigned workers,
                         const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!err) err = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned count = std::min<std::size_t>(workers, n);
    pool.reserve(count);
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace augrisk
