#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nsl/dulac.hpp"
#include "nsl/flow.hpp"
#include "oracles.hpp"

using namespace nsl;
using Catch::Approx;

namespace {
const SectionConfig kSec{}; // eta = zeta0 = 1, strip [1, 1.4]
IntegratorSettings rk() { return IntegratorSettings{}; }
IntegratorSettings scalar() {
    IntegratorSettings s;
    s.backend = FlowBackend::scalar_m;
    return s;
}
} // namespace

TEST_CASE("passage exit matches the level-set oracle", "[flow]") {
    const SaddleParams p = reduced_family(0.0);
    SECTION("symmetric entry") {
        const DulacRecord r = passage(p, kSec, 0.2, rk());
        // with eta = zeta0 = 1 the exit equals the entry abscissa exactly
        CHECK(r.omega == Approx(0.2).epsilon(1e-9));
        CHECK(std::abs(r.Ldrift) <= 1e-10);
        CHECK(r.T > 0);
        CHECK(r.steps > 0);
    }
    SECTION("asymmetric entry against an independent bisection") {
        SectionConfig sec = kSec;
        sec.eta = 1.2;
        const DulacRecord r = passage(p, sec, 0.2, rk());
        const double level = 0.2 * 1.2 * (0.04 + 1.44);
        const double wOracle = oracles::exit_height_gamma0(level, 1.0);
        CHECK(r.omega == Approx(wOracle).epsilon(1e-9));
        CHECK(std::abs(r.Ldrift) <= 1e-10);
    }
}

TEST_CASE("near-trivial passage when the entry hugs the exit section", "[flow]") {
    const SaddleParams p = reduced_family(0.0);
    SectionConfig sec = kSec;
    sec.eta = 0.01;
    sec.etaMin = 0.01;
    sec.etaMax = 0.014;
    const DulacRecord r = passage(p, sec, 1.0 - 1e-9, rk());
    CHECK(r.T < 1e-8);
    CHECK(r.omega == Approx(0.01).margin(1e-6));
}

TEST_CASE("T decreases and omega increases along the entry leaf", "[flow]") {
    for (double g : {0.0, 2.0}) {
        const SaddleParams p = reduced_family(g);
        double prevT = std::numeric_limits<double>::infinity(), prevW = 0.0;
        for (int i = 0; i < 50; ++i) {
            const double xi = 0.01 * std::pow(0.9 / 0.01, i / 49.0);
            const DulacRecord r = passage(p, kSec, xi, rk());
            CHECK(r.T < prevT);
            CHECK(r.omega > prevW);
            prevT = r.T;
            prevW = r.omega;
        }
    }
}

TEST_CASE("first-integral conservation across tolerances", "[flow]") {
    const SaddleParams p = reduced_family(-3.0);
    IntegratorSettings st = rk();
    double prevDrift = std::numeric_limits<double>::infinity();
    double prevT = 0.0, prevDT = std::numeric_limits<double>::infinity();
    const DulacRecord ref = [&] {
        IntegratorSettings tight = rk();
        tight.relTol = 1e-13;
        tight.absTol = 1e-15;
        return passage(p, kSec, 1e-4, tight);
    }();
    for (double tol : {1e-7, 5e-8, 2.5e-8, 1.25e-8}) {
        st.relTol = tol;
        st.absTol = tol * 1e-2;
        const DulacRecord r = passage(p, kSec, 1e-4, st);
        const double drift = std::abs(r.Ldrift);
        const double dT = std::abs(r.T - ref.T);
        CHECK(drift < prevDrift);
        CHECK(dT < prevDT);
        prevDrift = drift;
        prevDT = dT;
        prevT = r.T;
    }
    CHECK(prevT > 0);
}

TEST_CASE("fixed-step error drops by at least 8x per halving (order >= 4)", "[flow]") {
    const SaddleParams p = reduced_family(0.0);
    auto rhs = [&p](double, const ode::State<2>& y) -> ode::State<2> {
        const PhasePoint v = field_eval(p, {y[0], y[1]});
        return {v.x, v.y};
    };
    auto endpoint = [&](int n) {
        ode::Dopri5<2, decltype(rhs)> st(rhs, ode::StepControl{});
        st.init(0.0, {0.3, 1.0});
        const double h = 1.0 / n;
        for (int i = 0; i < n; ++i)
            st.step_fixed(h);
        return st.y();
    };
    const auto refState = endpoint(4096);
    double prevErr = 0;
    for (int k = 0; k < 3; ++k) {
        const int n = 32 << k;
        const auto y = endpoint(n);
        const double err = std::hypot(y[0] - refState[0], y[1] - refState[1]);
        if (k > 0)
            CHECK(prevErr / err >= 8.0);
        prevErr = err;
    }
}

TEST_CASE("level-set exit identity on measured passages", "[flow]") {
    for (double g : {0.0, 2.0, -3.0}) {
        const SaddleParams p = reduced_family(g);
        const Exponents e = validate(p);
        for (double xi : {0.02, 0.1, 0.4}) {
            SectionConfig sec = kSec;
            sec.eta = 1.2;
            const DulacRecord r = passage(p, sec, xi, rk());
            auto side = [&](double x, double y) {
                return std::pow(x, e.u) * std::pow(y, e.v) *
                       (e.c0 * x * x + e.c1 * x * y + e.c2 * y * y);
            };
            CHECK(side(xi, sec.eta) == Approx(side(sec.zeta0, r.omega)).epsilon(1e-8));
        }
    }
}

TEST_CASE("time reversal returns to the entry point", "[flow]") {
    const SaddleParams p = reduced_family(2.0);
    const DulacRecord r = passage(p, kSec, 0.05, rk());
    const PhasePoint back =
        flow_for_time(p, {kSec.zeta0, r.omega}, r.T, rk(), false, /*reversed=*/true);
    CHECK(back.x == Approx(0.05).epsilon(1e-6));
    CHECK(back.y == Approx(1.0).epsilon(1e-6));
}

TEST_CASE("Dulac time inversion round trip and errors", "[flow]") {
    const SaddleParams p = reduced_family(0.0);
    SECTION("round trip") {
        const DulacRecord r = passage(p, kSec, 0.15, rk());
        const double xi = invert_dulac_time(p, kSec, r.T, rk());
        CHECK(xi == Approx(0.15).epsilon(1e-7));
    }
    SECTION("forward-check against the asymptotic coefficients at T = 100") {
        const Exponents e = validate(p);
        const AsymptoticCoeffs c = coefficients(e, 1.0, 1.0);
        const double xi = invert_dulac_time(p, kSec, 100.0, rk());
        CHECK(xi == Approx(c.xi0 * 1e-4 * (1.0 - c.xi1 / 100.0)).epsilon(0.01));
        CHECK(passage(p, kSec, xi, rk()).T == Approx(100.0).epsilon(1e-7));
    }
    SECTION("T below the minimal passage time") {
        CHECK_THROWS_AS(invert_dulac_time(p, kSec, 1e-12, rk()), TTooSmall);
    }
}

TEST_CASE("scalar backend agrees with the trajectory backend", "[flow]") {
    for (double g : {0.0, 2.0, -3.0}) {
        const SaddleParams p = reduced_family(g);
        for (double xi : {0.01, 0.2}) {
            SectionConfig sec = kSec;
            sec.eta = 1.1;
            const DulacRecord a = passage(p, sec, xi, rk());
            const DulacRecord b = passage(p, sec, xi, scalar());
            CHECK(a.T == Approx(b.T).epsilon(1e-8));
            CHECK(a.omega == Approx(b.omega).epsilon(1e-8));
            CHECK(b.Ldrift == 0.0);
        }
    }
}

TEST_CASE("scalar backend refuses a genuinely perturbed field", "[flow]") {
    SaddleParams p = reduced_family(0.0);
    p.perturbation = quartic_perturbation(0.5);
    CHECK_THROWS_AS(passage(p, kSec, 0.2, scalar(), true), Error);
    CHECK_NOTHROW(passage(p, kSec, 0.2, scalar(), false));
}

TEST_CASE("domain exit raises LeftDomain", "[flow]") {
    // strong negative mixed term: y rises above the entry height mid-passage
    const SaddleParams p = reduced_family(-3.9);
    SectionConfig sec;
    sec.eta = 1.0;
    sec.etaMin = 1.0;
    sec.etaMax = 1.0;
    sec.boxY = 1.1; // tight box; the default (2 etaMax) would accommodate the bulge
    CHECK_THROWS_AS(passage(p, sec, 0.2, rk()), LeftDomain);
    sec.boxY = 2.0;
    CHECK_NOTHROW(passage(p, sec, 0.2, rk()));
}

TEST_CASE("step budget exhaustion raises MaxStepsExceeded", "[flow]") {
    const SaddleParams p = reduced_family(0.0);
    IntegratorSettings st = rk();
    st.maxSteps = 50;
    CHECK_THROWS_AS(passage(p, kSec, 1e-6, st), MaxStepsExceeded);
}

TEST_CASE("polyline brackets the passage", "[flow]") {
    const SaddleParams p = reduced_family(0.0);
    const auto poly = trajectory_polyline(p, kSec, 0.2, rk());
    REQUIRE(poly.size() > 3);
    CHECK(poly.front().first == 0.0);
    CHECK(poly.front().second.x == Approx(0.2));
    CHECK(poly.back().second.x == Approx(kSec.zeta0).margin(1e-9));
    for (std::size_t i = 1; i < poly.size(); ++i)
        CHECK(poly[i].first > poly[i - 1].first);
    const DulacRecord r = passage(p, kSec, 0.2, rk());
    CHECK(poly.back().first == Approx(r.T).epsilon(1e-9));
}

TEST_CASE("settings and section validation", "[flow]") {
    const SaddleParams p = reduced_family(0.0);
    IntegratorSettings st = rk();
    st.relTol = 1e-14; // below the supported floor
    CHECK_THROWS_AS(passage(p, kSec, 0.2, st), Error);
    SectionConfig bad = kSec;
    bad.eta = 2.0; // above etaMax
    CHECK_THROWS_AS(passage(p, bad, 0.2, rk()), Error);
    CHECK_THROWS_AS(passage(p, kSec, 1.5, rk()), Error); // xi >= zeta0
}
