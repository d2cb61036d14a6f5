// Copyright (c) 2026 augrisk contributors
// Licensed under the Apache License, Version 2.0.

#include <catch2/catch.hpp>

#include "augrisk/augment.hpp"
#include "test_util.hpp"

using namespace augrisk;
using testutil::fd_gram_factor;
using testutil::random_theta;
using testutil::random_vec;

namespace {

// Operators under test plus a generator for admissible sample vectors.
struct OpCase {
    OpPtr op;
    std::function<Vec(Rng&)> draw_x;
};

std::vector<OpCase> identity_cases() {
    std::vector<OpCase> cases;
    cases.push_back({std::make_shared<Rotation2D>(),
                     [](Rng& r) { return random_vec(r, 4); }});
    cases.push_back({std::make_shared<AdditiveShift>(3, 0.5),
                     [](Rng& r) { return random_vec(r, 3); }});
    cases.push_back({std::make_shared<Scale>(0.4),
                     [](Rng& r) { return random_vec(r, 3, 0.5, 2.0); }});
    cases.push_back({std::make_shared<ColorAdjust>(1),
                     [](Rng& r) { return random_vec(r, 5, 0.15, 0.9); }});
    cases.push_back({compose({std::make_shared<Rotation2D>(),
                              std::make_shared<AdditiveShift>(4, 0.5)}),
                     [](Rng& r) { return random_vec(r, 4); }});
    cases.push_back({compose({std::make_shared<ColorAdjust>(1),
                              std::make_shared<Scale>(0.1)}),
                     [](Rng& r) { return random_vec(r, 4, 0.3, 0.7); }});
    return cases;
}

// Operators whose parameter map is injective, so the Gram determinant is
// strictly positive. Composites with AdditiveShift over-parameterize the
// image manifold (1 + n parameters on an n-dimensional space) and scaling
// after a color adjustment is absorbable into (alpha, beta); both have a
// singular Gram by construction and stay out of the Jacobian corpus.
std::vector<OpCase> jacobian_cases() {
    std::vector<OpCase> cases;
    cases.push_back({std::make_shared<Rotation2D>(),
                     [](Rng& r) { return random_vec(r, 4); }});
    cases.push_back({std::make_shared<AdditiveShift>(3, 0.5),
                     [](Rng& r) { return random_vec(r, 3); }});
    cases.push_back({std::make_shared<Scale>(0.4),
                     [](Rng& r) { return random_vec(r, 3, 0.5, 2.0); }});
    cases.push_back({std::make_shared<ColorAdjust>(1),
                     [](Rng& r) { return random_vec(r, 5, 0.15, 0.9); }});
    cases.push_back({compose({std::make_shared<Rotation2D>(),
                              std::make_shared<Scale>(0.3)}),
                     [](Rng& r) { return random_vec(r, 4); }});
    return cases;
}

}  // namespace

TEST_CASE("apply matches the defining formulas", "[augment]") {
    Rotation2D rot;
    CHECK(rot.apply(Vec{0.0}, Vec{1.0, 0.0}) == Vec{1.0, 0.0});
    const Vec quarter = rot.apply(Vec{M_PI / 2}, Vec{1.0, 0.0});
    CHECK(quarter[0] == Approx(0.0).margin(1e-12));
    CHECK(quarter[1] == Approx(1.0).margin(1e-12));

    ColorAdjust color;
    const Vec adjusted = color.apply(Vec{0.1, 0.5, 2.0}, Vec{0.5});
    CHECK(adjusted[0] == Approx(0.475).margin(1e-15));

    AdditiveShift shift(2, 0.5);
    const Vec shifted = shift.apply(Vec{0.2, -0.1}, Vec{1.0, 1.0});
    CHECK(shifted[0] == Approx(1.2));
    CHECK(shifted[1] == Approx(0.9));
}

TEST_CASE("identity element is exact at the bit level", "[augment]") {
    Rng rng(42);
    for (const auto& c : identity_cases()) {
        for (int rep = 0; rep < 170; ++rep) {
            const Vec x = c.draw_x(rng);
            const Vec out = c.op->apply(c.op->identity(), x);
            REQUIRE(out.size() == x.size());
            for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(out[i] == x[i]);
        }
    }
}

TEST_CASE("inverse round-trips within 1e-9", "[augment]") {
    Rng rng(7);
    const std::vector<OpCase> cases = {
        {std::make_shared<Rotation2D>(), [](Rng& r) { return random_vec(r, 4); }},
        {std::make_shared<AdditiveShift>(3, 0.5), [](Rng& r) { return random_vec(r, 3); }},
        {std::make_shared<Scale>(0.4), [](Rng& r) { return random_vec(r, 3, 0.5, 2.0); }},
    };
    for (const auto& c : cases) {
        REQUIRE(c.op->has_inverse());
        for (int rep = 0; rep < 100; ++rep) {
            const Vec x = c.draw_x(rng);
            const Vec theta = random_theta(rng, c.op->space());
            const Vec x_prime = c.op->apply(theta, x);
            const Vec back = c.op->invert(x_prime, x);
            REQUIRE(back.size() == theta.size());
            for (std::size_t k = 0; k < theta.size(); ++k)
                REQUIRE(back[k] == Approx(theta[k]).margin(1e-9));
        }
    }

    AdditiveShift shift(2, 0.5);
    const Vec rec = shift.invert(Vec{1.2, 0.9}, Vec{1.0, 1.0});
    CHECK(rec[0] == Approx(0.2));
    CHECK(rec[1] == Approx(-0.1));

    Scale scale(0.4);
    CHECK(scale.invert(Vec{1.0, 2.0}, Vec{1.0, 2.0})[0] == 0.0);
}

TEST_CASE("jacobian factor: closed forms and finite differences", "[augment]") {
    Rng rng(19);
    AdditiveShift shift(3, 0.5);
    CHECK(jacobian_factor(shift, Vec{0.1, -0.2, 0.0}, Vec{1.0, 2.0, 3.0}) == Approx(1.0));

    Rotation2D rot;
    CHECK(jacobian_factor(rot, Vec{0.3}, Vec{1.0, 0.0}) == Approx(1.0));
    CHECK(jacobian_factor(rot, Vec{-1.1}, Vec{3.0, 4.0}) == Approx(5.0));

    for (const auto& c : jacobian_cases()) {
        for (int rep = 0; rep < 100 / 5; ++rep) {
            const Vec x = c.draw_x(rng);
            const Vec theta = random_theta(rng, c.op->space());
            const double analytic = jacobian_factor(*c.op, theta, x);
            const double numeric = fd_gram_factor(*c.op, theta, x);
            REQUIRE(numeric > 0.0);
            REQUIRE(std::fabs(analytic - numeric) / numeric <= 1e-4);
        }
    }
}

TEST_CASE("composition follows the declared application order", "[augment]") {
    auto rot = std::make_shared<Rotation2D>();
    auto shift = std::make_shared<AdditiveShift>(Vec{-2.0, -2.0}, Vec{2.0, 2.0});

    // rotation first: shift(rot(x)).
    const auto forward = compose({rot, shift});
    const Vec a = forward->apply(Vec{M_PI / 2, 1.0, 0.0}, Vec{1.0, 0.0});
    CHECK(a[0] == Approx(1.0).margin(1e-12));
    CHECK(a[1] == Approx(1.0).margin(1e-12));

    // reversed order: rot(shift(x)); parameters concatenate in application
    // order, so theta = (shift params, angle).
    const auto reversed = compose({rot, shift}, {1, 0});
    const Vec b = reversed->apply(Vec{1.0, 0.0, M_PI / 2}, Vec{1.0, 0.0});
    CHECK(b[0] == Approx(0.0).margin(1e-12));
    CHECK(b[1] == Approx(2.0).margin(1e-12));

    // single-op composition with identity parameters is the identity map.
    const auto single = compose({shift});
    CHECK(single->apply(Vec{0.0, 0.0}, Vec{0.3, -0.4}) == Vec{0.3, -0.4});

    // nested-evaluation oracle, bit-exact, over random draws.
    auto scale = std::make_shared<Scale>(0.3);
    const auto chain = compose({shift, rot, scale});
    Rng rng(5);
    for (int rep = 0; rep < 100; ++rep) {
        const Vec x = random_vec(rng, 2);
        const Vec ts = random_theta(rng, shift->space());
        const Vec tr = random_theta(rng, rot->space());
        const Vec tc = random_theta(rng, scale->space());
        Vec theta = ts;
        theta.insert(theta.end(), tr.begin(), tr.end());
        theta.insert(theta.end(), tc.begin(), tc.end());
        const Vec composed = chain->apply(theta, x);
        const Vec nested = scale->apply(tc, rot->apply(tr, shift->apply(ts, x)));
        REQUIRE(composed == nested);
    }
}

TEST_CASE("color adjustment does not close under composition", "[augment]") {
    // Least-squares oracle: fit a single (alpha, beta, gamma) to the composed
    // map on a 16-pixel channel; no parameter reproduces it within 1e-6.
    Rng rng(23);
    Vec pixels = random_vec(rng, 16, 0.1, 0.9);
    ColorAdjust color;

    for (int rep = 0; rep < 3; ++rep) {
        const Vec g = {rng.uniform(0.05, 0.25), rng.uniform(-0.3, 0.3), rng.uniform(0.6, 0.9)};
        const Vec g2 = {rng.uniform(0.05, 0.25), rng.uniform(-0.3, 0.3), rng.uniform(1.3, 1.9)};
        const Vec target = color.apply(g2, color.apply(g, pixels));

        double best = std::numeric_limits<double>::infinity();
        for (double c = 0.05; c <= 6.0; c += 0.002) {
            // optimal (a, b) for a fixed exponent by linear least squares
            double s1 = 0, sv = 0, svv = 0, st = 0, svt = 0;
            for (std::size_t i = 0; i < pixels.size(); ++i) {
                const double v = std::pow(pixels[i], c);
                s1 += 1;
                sv += v;
                svv += v * v;
                st += target[i];
                svt += v * target[i];
            }
            const double det = s1 * svv - sv * sv;
            if (std::fabs(det) < 1e-12) continue;
            const double a = (svv * st - sv * svt) / det;
            const double b = (s1 * svt - sv * st) / det;
            double sse = 0;
            for (std::size_t i = 0; i < pixels.size(); ++i) {
                const double r = a + b * std::pow(pixels[i], c) - target[i];
                sse += r * r;
            }
            best = std::min(best, std::sqrt(sse));
        }
        INFO("best single-parameter fit residual " << best);
        REQUIRE(best > 1e-6);
    }
}

TEST_CASE("discrete flip is an involution outside the Jacobian paths", "[augment]") {
    DiscreteFlip flip;
    const Vec x = {0.5, -1.0, 2.0, 0.25};
    CHECK(flip.apply(Vec{0.0}, x) == x);
    const Vec mirrored = flip.apply(Vec{1.0}, x);
    CHECK(mirrored[0] == -0.5);
    CHECK(mirrored[1] == -1.0);
    CHECK(flip.apply(Vec{1.0}, mirrored) == x);
    CHECK(flip.invert(mirrored, x) == Vec{1.0});
    CHECK(flip.invert(x, x) == Vec{0.0});
    CHECK_FALSE(flip.differentiable());
    CHECK_THROWS_AS(jacobian_factor(flip, Vec{0.0}, x), NotDifferentiable);
    CHECK_THROWS_AS(flip.apply(Vec{0.5}, x), ParamOutOfRange);
}

TEST_CASE("operator error contracts", "[augment]") {
    Rotation2D rot;
    CHECK_THROWS_AS(rot.apply(Vec{7.0}, Vec{1.0, 0.0}), ParamOutOfRange);
    CHECK_THROWS_AS(rot.apply(Vec{0.1}, Vec{1.0, 0.0, 2.0}), DomainError);

    ColorAdjust color;
    CHECK_THROWS_AS(color.apply(Vec{0.0, 0.0, 1.0}, Vec{0.5, 0.0}), DomainError);
    CHECK_THROWS_AS(color.apply(Vec{0.0, 0.0, 1.0}, Vec{-0.2}), DomainError);
    CHECK_THROWS_AS(color.invert(Vec{0.5}, Vec{0.5}), NoInverse);

    AdditiveShift shift(2, 0.1);
    CHECK_THROWS_AS(shift.invert(Vec{3.0, 3.0}, Vec{0.0, 0.0}), NotInImage);

    Scale scale(0.4);
    CHECK_THROWS_AS(scale.invert(Vec{-1.0, 0.0}, Vec{1.0, 0.0}), NotInImage);
    CHECK_THROWS_AS(scale.invert(Vec{0.0, 0.0}, Vec{0.0, 0.0}), NotInImage);
    CHECK_THROWS_AS(jacobian_factor(scale, Vec{0.1}, Vec{0.0, 0.0}), SingularJacobian);

    CHECK_THROWS_AS(compose({}), EmptyComposition);
    const ParamSpace bad{Vec{1.0}, Vec{0.0}};
    CHECK_THROWS_AS(bad.validate("test"), ConfigError);
}

TEST_CASE("composite inherits flags and rejects intractable requests", "[augment]") {
    auto rot = std::make_shared<Rotation2D>();
    auto flip = std::make_shared<DiscreteFlip>();
    const auto two = compose({rot, std::make_shared<AdditiveShift>(2, 0.5)});
    CHECK_FALSE(two->has_inverse());
    CHECK(two->differentiable());
    CHECK_THROWS_AS(two->invert(Vec{0.0, 0.0}, Vec{0.0, 0.0}), NoInverse);

    const auto with_flip = compose({rot, flip});
    CHECK_FALSE(with_flip->differentiable());
    CHECK_THROWS_AS(jacobian_factor(*with_flip, Vec{0.0, 0.0}, Vec{1.0, 0.0}),
                    NotDifferentiable);

    const auto single = compose({rot});
    CHECK(single->has_inverse());
    const Vec rec = single->invert(rot->apply(Vec{0.7}, Vec{1.0, 0.0}), Vec{1.0, 0.0});
    CHECK(rec[0] == Approx(0.7).margin(1e-9));
}
