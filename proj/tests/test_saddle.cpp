#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nsl/saddle.hpp"
#include "oracles.hpp"

using namespace nsl;
using Catch::Approx;

TEST_CASE("reduced family at gamma = 0", "[saddle]") {
    const SaddleParams p = reduced_family(0.0);
    CHECK(p.a0 == 1.0);
    CHECK(p.a1 == 0.0);
    CHECK(p.a2 == 3.0);
    CHECK(p.b0 == 3.0);
    CHECK(p.b2 == 1.0);
    const Exponents e = validate(p);
    CHECK(e.u == Approx(1.0).margin(1e-14));
    CHECK(e.v == Approx(1.0).margin(1e-14));
    CHECK(e.beta0 == Approx(2.0));
    CHECK(e.beta2 == Approx(2.0));
    CHECK(e.Delta == Approx(8.0));
    CHECK(e.c0 == Approx(4.0));
    CHECK(e.c1 == 0.0);
    CHECK(e.c2 == Approx(4.0));
    CHECK(e.betaStar == Approx(0.5));
    CHECK(is_divergence_free(p));
}

TEST_CASE("reduced family domain and derived exponents", "[saddle]") {
    CHECK_THROWS_AS(reduced_family(4.0), GammaOutOfRange);
    CHECK_THROWS_AS(reduced_family(-4.0), GammaOutOfRange);
    CHECK_NOTHROW(reduced_family(3.99));
    const Exponents e = validate(reduced_family(2.0));
    CHECK(e.u == Approx(1.0));
    CHECK(e.v == Approx(1.0));
    CHECK(e.beta0 == Approx(2.0));
    CHECK(e.beta2 == Approx(2.0));
}

TEST_CASE("validate rejects the documented degeneracies", "[saddle]") {
    SaddleParams p;
    // b2 = 0 corner is admissible: Delta = 9, ellipticity holds
    p = {1, 0, 3, 3, 0, 0};
    CHECK_NOTHROW(validate(p));

    p = {1, 0, 1, 1, 0, 1}; // Delta = 0
    CHECK_THROWS_AS(validate(p), DegenerateDelta);

    p = {1, 5, 3, 3, 5, 1}; // c1^2 = 100 >= 64
    CHECK_THROWS_AS(validate(p), EllipticityViolation);

    p = {-1, 0, 3, 3, 0, 1};
    CHECK_THROWS_AS(validate(p), NegativeCoefficient);

    p = {1, 1, 3, 3, 2, 1}; // a1 (u+1) = 2 vs b1 (v+1) = 4
    CHECK_THROWS_AS(validate(p), MixedTermMismatch);
}

TEST_CASE("field evaluation on the axes and at (1,1)", "[saddle]") {
    const SaddleParams p = reduced_family(0.0);
    PhasePoint v = field_eval(p, {0.0, 0.7});
    CHECK(v.x == 0.0);
    CHECK(v.y == Approx(-std::pow(0.7, 3)));
    v = field_eval(p, {0.7, 0.0});
    CHECK(v.y == 0.0);
    CHECK(v.x == Approx(std::pow(0.7, 3)));
    v = field_eval(p, {1.0, 1.0});
    CHECK(v.x == Approx(4.0));
    CHECK(v.y == Approx(-4.0));
}

TEST_CASE("odd symmetry of the cubic part", "[saddle]") {
    CounterRng rng(11, 0);
    for (const auto& p : oracles::random_admissible(50, 3)) {
        const double x = rng.next_in(-1, 1), y = rng.next_in(-1, 1);
        const PhasePoint a = field_eval(p, {x, y});
        const PhasePoint b = field_eval(p, {-x, -y});
        CHECK(b.x == Approx(-a.x).margin(1e-15));
        CHECK(b.y == Approx(-a.y).margin(1e-15));
    }
}

TEST_CASE("first integral closed forms", "[saddle]") {
    const SaddleParams p0 = reduced_family(0.0);
    CounterRng rng(5, 0);
    for (int i = 0; i < 20; ++i) {
        const double x = rng.next_in(0.05, 1.0), y = rng.next_in(0.05, 1.0);
        CHECK(first_integral(p0, {x, y}) == Approx(x * y * (x * x + y * y)).epsilon(1e-13));
    }
    const SaddleParams p2 = reduced_family(2.0);
    CHECK(first_integral(p2, {1.0, 1.0}) == Approx(3.0));
    CHECK_THROWS_AS(first_integral(p0, {0.0, 1.0}), NonPositivePoint);
    CHECK_THROWS_AS(first_integral(p0, {1.0, -0.2}), NonPositivePoint);
}

TEST_CASE("Lie derivative of L vanishes to finite-difference order", "[saddle]") {
    const auto params = oracles::random_admissible(1000, 42);
    CounterRng rng(43, 0);
    const double h = 1e-6;
    for (const auto& p : params) {
        const Exponents e = validate(p);
        const double x = rng.next_in(0.05, 0.95), y = rng.next_in(0.05, 0.95);
        auto L = [&](double a, double b) { return first_integral(p, e, {a, b}); };
        const auto [gx, gy] = oracles::fd_gradient(L, x, y, h);
        const PhasePoint X = field_eval(p, {x, y});
        const double lie = gx * X.x + gy * X.y;
        const double scale = std::hypot(gx, gy) * std::hypot(X.x, X.y);
        REQUIRE(scale > 0);
        CHECK(std::abs(lie) <= 1e-8 * scale);
    }
}

TEST_CASE("exponent identities hold to 1e-12 relative", "[saddle]") {
    for (const auto& p : oracles::random_admissible(400, 77)) {
        const Exponents e = validate(p);
        CHECK(e.u * e.Delta == Approx(2 * p.b2 * e.c0).epsilon(1e-12));
        CHECK(e.v * e.Delta == Approx(2 * p.a0 * e.c2).epsilon(1e-12));
        CHECK(e.beta0 / e.beta2 == Approx(e.u / e.v).epsilon(1e-12));
        CHECK(1.0 - 2.0 / (e.u + e.v + 2.0) ==
              Approx(0.5 / e.beta0 + 0.5 / e.beta2).epsilon(1e-12));
        CHECK(e.beta2 == Approx((e.u + e.v + 2.0) / (2.0 * e.u)).epsilon(1e-12));
        CHECK(e.beta2 == Approx((p.a2 + p.b2) / (2.0 * p.b2)).epsilon(1e-12));
        // u, v, Delta share a sign
        CHECK(std::signbit(e.u) == std::signbit(e.Delta));
        CHECK(std::signbit(e.v) == std::signbit(e.Delta));
        if (p.b0 > 0 && p.a2 > 0) {
            CHECK(e.beta0 > 0.5);
            CHECK(e.beta2 > 0.5);
        }
    }
}

TEST_CASE("divergence-free detection", "[saddle]") {
    CounterRng rng(9, 0);
    for (double g : {0.0, 1.5, -2.5}) {
        const SaddleParams p = reduced_family(g);
        CHECK(is_divergence_free(p));
        for (int i = 0; i < 1000; ++i) {
            const double x = rng.next_in(-1, 1), y = rng.next_in(-1, 1);
            CHECK(std::abs(divergence_cubic(p, {x, y})) <= 1e-12 * 4.0);
        }
    }
    const SaddleParams q{1, 0, 2, 3, 0, 1}; // a2 != 3 b2
    CHECK_FALSE(is_divergence_free(q));
    CHECK(std::abs(divergence_cubic(q, {0.5, 0.5})) > 1e-3);
}

TEST_CASE("quartic perturbation respects its declared bound", "[saddle]") {
    const Perturbation pert = quartic_perturbation(0.5);
    CounterRng rng(21, 0);
    for (int i = 0; i < 200; ++i) {
        const double x = rng.next_in(0, 1.5), y = rng.next_in(0, 1.5);
        const double r2 = x * x + y * y;
        const double mag = std::hypot(pert.px(x, y), pert.py(x, y));
        CHECK(mag <= pert.bound * r2 * r2 * (1 + 1e-12));
    }
    SaddleParams p = reduced_family(0.0);
    p.perturbation = pert;
    const PhasePoint v = field_eval(p, {0.5, 0.5}, true);
    const PhasePoint v0 = field_eval(p, {0.5, 0.5}, false);
    CHECK(v.x == Approx(v0.x + 0.5 * std::pow(0.5, 4)));
    CHECK(v.y == Approx(v0.y + 0.5 * std::pow(0.5, 4)));
    // perturbed field still vanishes on the axes
    CHECK(field_eval(p, {0.0, 0.8}, true).x == 0.0);
    CHECK(field_eval(p, {0.8, 0.0}, true).y == 0.0);
}
