#pragma once

// Saddle passages: integrate the planar flow from the entry transversal
// {y = eta} to the exit transversal {x = zeta0} with event detection, or
// evaluate the same passage through the scalar M-reduction (unperturbed
// fields only).  Also the monotone inversion T -> xi of the Dulac time.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nsl/ode.hpp"
#include "nsl/reduction.hpp"
#include "nsl/saddle.hpp"

namespace nsl {

struct MaxStepsExceeded : Error {
    using Error::Error;
};
struct LeftDomain : Error {
    using Error::Error;
};
struct TTooSmall : Error {
    using Error::Error;
};
struct NoConvergence : Error {
    using Error::Error;
};

struct SectionConfig {
    double eta = 1.0;   // entry height (unstable leaf)
    double zeta0 = 1.0; // exit abscissa (stable leaf)
    double etaMin = 1.0, etaMax = 1.4; // strip for area sampling
    double xiMax = 0.05;               // strip width for area sampling
    double boxX = 0.0, boxY = 0.0;     // validity box; 0 = default 2*zeta0 x 2*etaMax

    double box_x() const { return boxX > 0.0 ? boxX : 2.0 * zeta0; }
    double box_y() const { return boxY > 0.0 ? boxY : 2.0 * etaMax; }

    void check() const {
        if (!(zeta0 > 0.0) || !(eta > 0.0) || !(etaMin > 0.0) || !(etaMax >= etaMin) ||
            !(eta <= etaMax) || !(xiMax > 0.0))
            throw Error("invalid section configuration");
        if (!(eta < box_y()) || !(zeta0 < box_x()))
            throw Error("sections outside the validity box");
    }
};

enum class FlowBackend { rk45, scalar_m };

struct IntegratorSettings {
    double relTol = 1e-10;
    double absTol = 1e-12;
    long maxSteps = 2000000;
    double eventTol = 1e-12;
    FlowBackend backend = FlowBackend::rk45;

    void check() const {
        if (!(relTol >= 1e-13) || !(absTol > 0.0) || !(eventTol > 0.0) || maxSteps <= 0)
            throw Error("invalid integrator settings");
    }
};

struct DulacRecord {
    double eta = 0, xi = 0; // entry point (xi, eta)
    double omega = 0;       // exit ordinate
    double T = 0;           // passage time
    double Ldrift = 0;      // relative first-integral change across the passage
    long steps = 0;
};

namespace detail {

template <class Rhs>
struct PassageRun {
    Rhs rhs;
    ode::Dopri5<2, Rhs> stepper;
    double zeta0, boxX, boxY;
    const IntegratorSettings& st;
    long steps = 0;
    std::vector<std::pair<double, PhasePoint>>* polyline = nullptr;

    PassageRun(Rhs f, const IntegratorSettings& s, double z0, double bx, double by)
        : rhs(f), stepper(f, ode::StepControl{s.relTol, s.absTol}), zeta0(z0), boxX(bx), boxY(by),
          st(s) {}

    // Locates the first upward crossing of x = zeta0 inside the accepted
    // step, if any; checks a few interior points so that a brief excursion
    // across the section is not stepped over.
    bool event_time(double& tev) const {
        const auto& d = stepper.dense();
        double ta = d.t0;
        double fa = d.eval(ta)[0] - zeta0;
        if (fa >= 0.0) { // entered the step on/over the section
            tev = ta;
            return true;
        }
        for (double frac : {0.25, 0.5, 0.75, 1.0}) {
            const double tb = d.t0 + frac * d.h;
            const double fb = d.eval(tb)[0] - zeta0;
            if (fb >= 0.0) {
                double lo = ta, hi = tb;
                for (int it = 0; it < 200 && hi - lo > st.eventTol; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (d.eval(mid)[0] - zeta0 >= 0.0)
                        hi = mid;
                    else
                        lo = mid;
                }
                tev = hi;
                return true;
            }
            ta = tb;
            fa = fb;
        }
        return false;
    }

    // Runs until the section crossing; returns (T, exit point).
    std::pair<double, PhasePoint> run(PhasePoint start) {
        stepper.init(0.0, {start.x, start.y});
        if (polyline)
            polyline->push_back({0.0, start});
        for (;;) {
            if (++steps > st.maxSteps)
                throw MaxStepsExceeded("passage exceeded " + std::to_string(st.maxSteps) +
                                       " steps (entry too close to the stable manifold?)");
            // keep the spatial advance per step below ~0.1
            {
                const auto f = rhs(stepper.t(), stepper.y());
                const double speed = std::hypot(f[0], f[1]);
                if (speed > 0.0)
                    stepper.limit_step(0.1 / speed);
            }
            const double tPrev = stepper.t();
            stepper.step();
            if (!(stepper.t() > tPrev))
                throw NoConvergence("step size underflow during passage");
            double tev;
            if (event_time(tev)) {
                const auto ye = stepper.dense().eval(tev);
                if (polyline)
                    polyline->push_back({tev, PhasePoint{ye[0], ye[1]}});
                return {tev, PhasePoint{ye[0], ye[1]}};
            }
            const auto& y = stepper.y();
            if (polyline)
                polyline->push_back({stepper.t(), PhasePoint{y[0], y[1]}});
            if (y[0] < 0.0 || y[1] < 0.0 || y[0] > boxX || y[1] > boxY)
                throw LeftDomain("trajectory left the validity box at x=" + std::to_string(y[0]) +
                                 " y=" + std::to_string(y[1]));
        }
    }
};

} // namespace detail

inline DulacRecord passage(const SaddleParams& params, const SectionConfig& sections,
                           double entry_xi, const IntegratorSettings& settings,
                           bool perturbed = false) {
    sections.check();
    settings.check();
    const Exponents e = validate(params);
    if (!(entry_xi > 0.0) || !(entry_xi < sections.zeta0))
        throw Error("entry abscissa must satisfy 0 < xi < zeta0");

    DulacRecord rec;
    rec.xi = entry_xi;
    rec.eta = sections.eta;

    if (settings.backend == FlowBackend::scalar_m) {
        if (perturbed && params.perturbation.active())
            throw Error("scalar backend requires the unperturbed field");
        rec.omega = reduction::exit_omega(e, entry_xi, sections.eta, sections.zeta0);
        rec.T = reduction::dulac_time(e, entry_xi, sections.eta, rec.omega, sections.zeta0,
                                      std::min(1e-11, settings.relTol));
        rec.Ldrift = 0.0;
        rec.steps = 0;
        return rec;
    }

    const bool usePert = perturbed && params.perturbation.active();
    auto rhs = [&params, usePert](double, const ode::State<2>& y) -> ode::State<2> {
        const PhasePoint v = field_eval(params, {y[0], y[1]}, usePert);
        return {v.x, v.y};
    };
    detail::PassageRun<decltype(rhs)> run(rhs, settings, sections.zeta0, sections.box_x(),
                                          sections.box_y());
    const auto [T, exit] = run.run({entry_xi, sections.eta});
    rec.T = T;
    rec.omega = exit.y;
    rec.steps = run.steps;
    const double L0 = first_integral(params, e, {entry_xi, sections.eta});
    const double L1 = first_integral(params, e, exit);
    rec.Ldrift = L1 / L0 - 1.0;
    return rec;
}

// Dense output of one passage for plotting and observable quadrature.
inline std::vector<std::pair<double, PhasePoint>>
trajectory_polyline(const SaddleParams& params, const SectionConfig& sections, double entry_xi,
                    const IntegratorSettings& settings, bool perturbed = false) {
    sections.check();
    settings.check();
    validate(params);
    if (!(entry_xi > 0.0) || !(entry_xi < sections.zeta0))
        throw Error("entry abscissa must satisfy 0 < xi < zeta0");
    const bool usePert = perturbed && params.perturbation.active();
    auto rhs = [&params, usePert](double, const ode::State<2>& y) -> ode::State<2> {
        const PhasePoint v = field_eval(params, {y[0], y[1]}, usePert);
        return {v.x, v.y};
    };
    std::vector<std::pair<double, PhasePoint>> poly;
    detail::PassageRun<decltype(rhs)> run(rhs, settings, sections.zeta0, sections.box_x(),
                                          sections.box_y());
    run.polyline = &poly;
    run.run({entry_xi, sections.eta});
    return poly;
}

// Integrates the (possibly reversed) field for a fixed duration; used by
// time-reversal checks.
inline PhasePoint flow_for_time(const SaddleParams& params, PhasePoint start, double duration,
                                const IntegratorSettings& settings, bool perturbed = false,
                                bool reversed = false) {
    settings.check();
    const bool usePert = perturbed && params.perturbation.active();
    const double sign = reversed ? -1.0 : 1.0;
    auto rhs = [&params, usePert, sign](double, const ode::State<2>& y) -> ode::State<2> {
        const PhasePoint v = field_eval(params, {y[0], y[1]}, usePert);
        return {sign * v.x, sign * v.y};
    };
    ode::Dopri5<2, decltype(rhs)> stepper(rhs, ode::StepControl{settings.relTol, settings.absTol});
    stepper.init(0.0, {start.x, start.y});
    long steps = 0;
    while (stepper.t() < duration) {
        if (++steps > settings.maxSteps)
            throw MaxStepsExceeded("fixed-time integration exceeded the step budget");
        stepper.limit_step(duration - stepper.t() + 1e-16 * duration);
        const double tPrev = stepper.t();
        stepper.step();
        if (!(stepper.t() > tPrev))
            throw NoConvergence("step size underflow");
        if (stepper.t() >= duration) {
            const auto y = stepper.dense().eval(duration);
            return {y[0], y[1]};
        }
    }
    const auto& y = stepper.y();
    return {y[0], y[1]};
}

// Monotone inversion of the Dulac time: the xi whose passage takes time T.
// T is strictly decreasing in xi, so a geometric walk brackets the target
// and bisection on log(xi) closes in.
inline double invert_dulac_time(const SaddleParams& params, const SectionConfig& sections, double T,
                                const IntegratorSettings& settings, bool perturbed = false) {
    sections.check();
    settings.check();
    auto timeAt = [&](double xi) { return passage(params, sections, xi, settings, perturbed).T; };

    const double xiHi = sections.zeta0 * (1.0 - 1e-9);
    const double tMin = timeAt(xiHi);
    if (!(T >= tMin))
        throw TTooSmall("requested Dulac time below the minimal passage time " +
                        std::to_string(tMin));

    double hi = xiHi, tHi = tMin; // T(hi) <= T
    double lo = xiHi, tLo = tMin;
    int guard = 0;
    while (tLo < T) {
        hi = lo;
        tHi = tLo;
        lo /= 8.0;
        tLo = timeAt(lo);
        if (++guard > 120)
            throw NoConvergence("bracketing the Dulac time failed");
    }

    const double tol = std::max(settings.eventTol, settings.relTol * T);
    double xi = std::sqrt(lo * hi), tXi = 0.0;
    for (int it = 0; it < 200; ++it) {
        xi = std::sqrt(lo * hi);
        tXi = timeAt(xi);
        if (std::abs(tXi - T) <= tol)
            return xi;
        if (tXi > T)
            lo = xi;
        else
            hi = xi;
        if (hi - lo <= 1e-16 * hi)
            break;
    }
    if (std::abs(tXi - T) <= 64.0 * tol)
        return xi; // integration noise floor reached
    throw NoConvergence("Dulac time inversion did not reach tolerance");
}

} // namespace nsl
