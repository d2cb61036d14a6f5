// Copyright (c) 2026 augrisk contributors
// Licensed under the Apache License, Version 2.0.

#include <catch2/catch.hpp>

#include "augrisk/cansample.hpp"
#include "augrisk/data.hpp"
#include "test_util.hpp"

using namespace augrisk;
using testutil::ks_critical_1pct;
using testutil::ks_statistic;

namespace {

// Class = sign of the first coordinate. For rotation on the unit circle the
// accepted angles form exactly half of the circle.
ConceptionOracle halfplane_oracle() {
    return {[](const Vec& x) { return x[0] > 0.0 ? 1 : 0; }, 2};
}

}  // namespace

TEST_CASE("rejection acceptance matches the half-plane geometry", "[cansample]") {
    Rotation2D rot;
    const ParamPrior prior = ParamPrior::uniform(rot.space());
    const ConceptionOracle oracle = halfplane_oracle();
    const Vec x = {1.0, 0.0};

    Rng rng(101);
    std::size_t attempts = 0;
    const std::size_t draws = 10000;
    Vec accepted;
    for (std::size_t i = 0; i < draws; ++i) {
        const AugmentedPair p = sample_can(rot, prior, oracle, x, 1, rng);
        REQUIRE(p.accepted);
        REQUIRE(oracle(p.x_prime) == 1);
        attempts += std::size_t(p.attempts);
        accepted.push_back(p.theta[0]);
    }
    const double rate = double(draws) / double(attempts);
    CHECK(rate >= 0.48);
    CHECK(rate <= 0.52);

    // accepted angles are uniform on (-pi/2, pi/2)
    CHECK(std::fabs(mean(accepted)) <= 0.03);
    const double ks = ks_statistic(accepted, [](double t) { return (t + M_PI / 2) / M_PI; });
    CHECK(ks < ks_critical_1pct(accepted.size()));
}

TEST_CASE("a shift inside the class region accepts on the first attempt", "[cansample]") {
    const Dataset blobs = gen_blobs(2, 2, 20, 6.0, 3);
    AdditiveShift shift(2, 0.05);
    const ParamPrior prior = ParamPrior::uniform(shift.space());
    Rng rng(5);
    for (const auto& s : blobs.samples) {
        const AugmentedPair p = sample_can(shift, prior, blobs.oracle, s.x, s.y, rng);
        REQUIRE(p.attempts == 1);
    }
}

TEST_CASE("truncated gaussian prior: normalization and KS", "[cansample]") {
    const ParamSpace box{{-1.0, -0.5}, {1.0, 1.5}};
    const ParamPrior prior = ParamPrior::truncated_gaussian({0.2, 0.5}, {0.6, 0.8}, box);

    // density integrates to 1 over the box (tensor Simpson grid)
    const std::size_t n = 400;
    const double hx = 2.0 / double(n), hy = 2.0 / double(n);
    double integral = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        for (std::size_t j = 0; j <= n; ++j) {
            const double wx = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            const double wy = (j == 0 || j == n) ? 1.0 : (j % 2 ? 4.0 : 2.0);
            const Vec t = {-1.0 + double(i) * hx, -0.5 + double(j) * hy};
            integral += wx * wy * prior.density(t);
        }
    }
    integral *= hx * hy / 9.0;
    CHECK(integral == Approx(1.0).margin(1e-6));
    CHECK(prior.density(Vec{1.2, 0.0}) == 0.0);

    // marginal of the first component against its analytic truncated CDF
    Rng rng(77);
    Vec first;
    for (int i = 0; i < 10000; ++i) first.push_back(prior.sample(rng)[0]);
    auto phi = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
    const double lo = phi((-1.0 - 0.2) / 0.6), hi = phi((1.0 - 0.2) / 0.6);
    const double ks = ks_statistic(first, [&](double t) {
        return (phi((t - 0.2) / 0.6) - lo) / (hi - lo);
    });
    CHECK(ks < ks_critical_1pct(first.size()));
}

TEST_CASE("uniform prior normalizes on its box", "[cansample]") {
    const ParamSpace box{{-2.0}, {3.0}};
    const ParamPrior prior = ParamPrior::uniform(box);
    CHECK(prior.density(Vec{0.0}) == Approx(1.0 / 5.0));
    CHECK(prior.density(Vec{4.0}) == 0.0);
    double integral = 0.0;
    const std::size_t n = 1000;
    for (std::size_t i = 0; i < n; ++i)
        integral += prior.density(Vec{-2.0 + 5.0 * (double(i) + 0.5) / double(n)}) * 5.0 /
                    double(n);
    CHECK(integral == Approx(1.0).margin(1e-6));
}

TEST_CASE("conditional density is the truncated pushforward", "[cansample]") {
    const ConceptionOracle oracle = halfplane_oracle();

    SECTION("indicator zeroes the density outside the class level set") {
        Rotation2D rot;
        const ParamPrior prior = ParamPrior::uniform(rot.space());
        const Vec x = {2.0, 0.0};
        const Vec behind = rot.apply(Vec{3.0}, x);  // rotated into the other half-plane
        REQUIRE(oracle(behind) != oracle(x));
        CHECK(conditional_density(rot, prior, oracle, x, behind) == 0.0);
    }

    SECTION("uniform shift density is 1/volume inside the neighborhood") {
        AdditiveShift shift(2, 0.25);  // box volume 0.5 * 0.5 = 0.25
        const ParamPrior prior = ParamPrior::uniform(shift.space());
        const Vec x = {1.0, 0.0};
        const Vec x_prime = {1.1, -0.2};
        CHECK(conditional_density(shift, prior, oracle, x, x_prime) == Approx(4.0));
        CHECK(conditional_density(shift, prior, oracle, x, Vec{2.0, 2.0}) == 0.0);
    }

    SECTION("rotation density carries the arc-length factor ||x||") {
        Rotation2D rot;
        const ParamPrior prior = ParamPrior::uniform(rot.space());
        const Vec x = {2.0, 0.0};
        const Vec x_prime = rot.apply(Vec{0.4}, x);
        const double density = conditional_density(rot, prior, oracle, x, x_prime);
        CHECK(density == Approx((1.0 / (2.0 * M_PI)) * 2.0).epsilon(1e-9));

        // Quadrature over the circle with the arc-length element r dtheta:
        // integral of (prior * r) * r dtheta over the accepted half = r^2 / 2.
        const std::size_t n = 20000;
        double integral = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = -M_PI + 2.0 * M_PI * (double(i) + 0.5) / double(n);
            const Vec xp = rot.apply(Vec{t}, x);
            integral += conditional_density(rot, prior, oracle, x, xp) * 2.0 * (2.0 * M_PI) /
                        double(n);
        }
        CHECK(integral == Approx(2.0).margin(1e-3));

        // Histogram of accepted samples along the arc is flat.
        Rng rng(11);
        std::vector<std::size_t> bins(8, 0);
        const std::size_t draws = 100000;
        for (std::size_t i = 0; i < draws; ++i) {
            const AugmentedPair p = sample_can(rot, prior, oracle, x, 1, rng);
            const double t = p.theta[0];  // in (-pi/2, pi/2)
            bins[std::min<std::size_t>(7, std::size_t((t + M_PI / 2) / M_PI * 8))]++;
        }
        for (std::size_t b : bins)
            CHECK(std::fabs(double(b) / double(draws) - 0.125) < 0.01);
    }

    SECTION("the 2-D shift density is normalizable over the neighborhood") {
        AdditiveShift shift(2, 0.25);
        const ParamPrior prior = ParamPrior::uniform(shift.space());
        auto integrate = [&](const Vec& x) {
            const std::size_t n = 200;
            const double cell = 0.5 / double(n);
            double integral = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const Vec t = {-0.25 + (double(i) + 0.5) * cell,
                                   -0.25 + (double(j) + 0.5) * cell};
                    integral += conditional_density(shift, prior, oracle, x,
                                                    shift.apply(t, x)) *
                                cell * cell;
                }
            return integral;
        };
        // interior point: the whole box is accepted, the integral is 1
        CHECK(integrate(Vec{1.0, 0.0}) == Approx(1.0).margin(1e-9));
        // near the class boundary only t0 > -0.1 is accepted: mass 0.7
        const double partial = integrate(Vec{0.1, 0.0});
        CHECK(partial == Approx(0.7).margin(0.01));
        CHECK(partial > 0.0);
    }

    SECTION("ops without a tractable inverse refuse density evaluation") {
        ColorAdjust color;
        const ParamPrior prior = ParamPrior::uniform(color.space());
        CHECK_THROWS_AS(conditional_density(color, prior, oracle, Vec{0.5, 0.5}, Vec{0.5, 0.5}),
                        NoInverse);
    }
}

TEST_CASE("batch augmentation preserves grouping and determinism", "[cansample]") {
    const Dataset rings = gen_rings(3, 10, 9);
    Rotation2D rot;
    const ParamPrior prior = ParamPrior::uniform(rot.space());

    SECTION("M=1 yields one pair per clean sample") {
        Rng rng(4);
        std::vector<Sample> five(rings.samples.begin(), rings.samples.begin() + 5);
        const auto pairs = batch_augment(five, rot, prior, rings.oracle, 1, rng);
        REQUIRE(pairs.size() == 5);
        for (std::size_t i = 0; i < 5; ++i) CHECK(pairs[i].sample_index == i);
    }

    SECTION("M=3, N=2 yields groups of 3") {
        Rng rng(4);
        std::vector<Sample> two(rings.samples.begin(), rings.samples.begin() + 2);
        const auto pairs = batch_augment(two, rot, prior, rings.oracle, 3, rng);
        REQUIRE(pairs.size() == 6);
        for (std::size_t i = 0; i < 6; ++i) {
            CHECK(pairs[i].sample_index == i / 3);
            CHECK(pairs[i].copy_index == i % 3);
        }
    }

    SECTION("identical seeds give bit-identical pair lists") {
        Rng a(123), b(123);
        const auto pa = batch_augment(rings.samples, rot, prior, rings.oracle, 2, a);
        const auto pb = batch_augment(rings.samples, rot, prior, rings.oracle, 2, b);
        REQUIRE(pa.size() == pb.size());
        for (std::size_t i = 0; i < pa.size(); ++i) {
            REQUIRE(pa[i].theta == pb[i].theta);
            REQUIRE(pa[i].x_prime == pb[i].x_prime);
            REQUIRE(pa[i].attempts == pb[i].attempts);
        }
    }

    SECTION("results are independent of the worker count") {
        Rng a(123), b(123);
        SampleOptions serial, threaded;
        threaded.workers = 4;
        const auto pa = batch_augment(rings.samples, rot, prior, rings.oracle, 2, a, serial);
        const auto pb = batch_augment(rings.samples, rot, prior, rings.oracle, 2, b, threaded);
        REQUIRE(pa.size() == pb.size());
        for (std::size_t i = 0; i < pa.size(); ++i) REQUIRE(pa[i].theta == pb[i].theta);
    }

    SECTION("every returned pair stays inside the consistency neighborhood") {
        Rng rng(321);
        const auto pairs = batch_augment(rings.samples, rot, prior, rings.oracle, 4, rng);
        for (const auto& p : pairs) {
            REQUIRE(rings.oracle(p.x_prime) == p.y);
            REQUIRE(p.x_prime == rot.apply(p.theta, p.x));
        }
    }
}

TEST_CASE("rejection exhaustion falls back or throws", "[cansample]") {
    // An oracle that accepts only the clean sample itself: acceptance
    // probability 0 for any nondegenerate rotation draw.
    const Vec x = {1.0, 0.0};
    ConceptionOracle strict{[&x](const Vec& v) { return max_abs_diff(v, x) < 1e-12 ? 1 : 0; },
                            2};
    Rotation2D rot;
    const ParamPrior prior = ParamPrior::uniform(rot.space());

    SampleOptions opts;
    opts.max_attempts = 5;
    opts.fallback_to_identity = false;
    Rng rng(2);
    CHECK_THROWS_AS(sample_can(rot, prior, strict, x, 1, rng, opts), AcceptanceExhausted);

    opts.fallback_to_identity = true;
    const AugmentedPair p = sample_can(rot, prior, strict, x, 1, rng, opts);
    CHECK_FALSE(p.accepted);
    CHECK(p.attempts == 5);
    CHECK(p.x_prime == x);
    CHECK(p.theta == rot.identity());

    // batch propagation carries the offending sample index
    std::vector<Sample> batch = {{x, 1}, {x, 1}};
    opts.fallback_to_identity = false;
    Rng rng2(3);
    try {
        batch_augment(batch, rot, prior, strict, 1, rng2, opts);
        FAIL("expected AcceptanceExhausted");
    } catch (const AcceptanceExhausted& e) {
        CHECK(std::string(e.what()).find("sample") != std::string::npos);
    }
}

TEST_CASE("finite and product priors sample their support", "[cansample]") {
    const ParamPrior grid = ParamPrior::finite({{-0.1}, {0.0}, {0.1}});
    Rng rng(8);
    std::vector<std::size_t> counts(3, 0);
    for (int i = 0; i < 3000; ++i) {
        const Vec t = grid.sample(rng);
        if (t[0] < -0.05)
            counts[0]++;
        else if (t[0] > 0.05)
            counts[2]++;
        else
            counts[1]++;
    }
    for (std::size_t c : counts) CHECK(double(c) / 3000.0 == Approx(1.0 / 3.0).margin(0.05));
    CHECK_THROWS_AS(grid.density(Vec{0.0}), Error);

    const ParamPrior prod = ParamPrior::product(
        {ParamPrior::uniform(ParamSpace{{-1.0}, {1.0}}),
         ParamPrior::uniform(ParamSpace{{0.0, 0.0}, {2.0, 2.0}})});
    CHECK(prod.dims() == 3);
    const Vec t = prod.sample(rng);
    REQUIRE(t.size() == 3);
    CHECK(prod.density(t) == Approx(0.5 * 0.25));
}
