#pragma once

// Theta = int r^rho dt along saddle passages, computed two independent ways:
// error-controlled quadrature riding on the trajectory integration, and the
// closed M-substitution form.  The fitted growth of Theta(T) exhibits the
// trichotomy T^{1-rho/2} / log T / bounded.

#include <cmath>
#include <vector>

#include "nsl/dulac.hpp"
#include "nsl/flow.hpp"
#include "nsl/ode.hpp"
#include "nsl/parallel.hpp"
#include "nsl/reduction.hpp"

namespace nsl {

enum class ThetaMethod { trajectory_quadrature, m_substitution };

struct PassageIntegral {
    double rho = 0;
    double T = 0;
    double theta = 0;
    ThetaMethod method = ThetaMethod::trajectory_quadrature;
};

namespace detail {

inline void check_rho(double rho) {
    if (!(rho > -2.0))
        throw NonIntegrable("rho must exceed -2");
    if (!(rho <= 4.0))
        throw Error("rho above 4 is out of the supported range");
}

// Augmented run (x, y, theta) with theta' = (x^2+y^2)^{rho/2}; stops at the
// first upward crossing of the event function.  The quadrature state shares
// the embedded pair's error control.
template <class Event>
std::pair<double, double> theta_run(const SaddleParams& params, PhasePoint start, double rho,
                                    const IntegratorSettings& st, bool perturbed, Event event) {
    const bool usePert = perturbed && params.perturbation.active();
    auto rhs = [&params, usePert, rho](double, const ode::State<3>& y) -> ode::State<3> {
        const PhasePoint v = field_eval(params, {y[0], y[1]}, usePert);
        return {v.x, v.y, std::pow(y[0] * y[0] + y[1] * y[1], 0.5 * rho)};
    };
    ode::Dopri5<3, decltype(rhs)> stepper(rhs, ode::StepControl{st.relTol, st.absTol});
    stepper.init(0.0, {start.x, start.y, 0.0});
    long steps = 0;
    for (;;) {
        if (++steps > st.maxSteps)
            throw MaxStepsExceeded("theta run exceeded the step budget");
        {
            const auto f = rhs(0.0, stepper.y());
            const double speed = std::hypot(f[0], f[1]);
            if (speed > 0.0)
                stepper.limit_step(0.1 / speed);
        }
        const double tPrev = stepper.t();
        stepper.step();
        if (!(stepper.t() > tPrev))
            throw NoConvergence("step size underflow during theta run");
        const auto& d = stepper.dense();
        double ta = d.t0;
        auto ya = d.eval(ta);
        double fa = event(PhasePoint{ya[0], ya[1]});
        if (fa >= 0.0)
            return {ta, ya[2]};
        for (double frac : {0.25, 0.5, 0.75, 1.0}) {
            const double tb = d.t0 + frac * d.h;
            const auto yb = d.eval(tb);
            if (event(PhasePoint{yb[0], yb[1]}) >= 0.0) {
                double lo = ta, hi = tb;
                for (int it = 0; it < 200 && hi - lo > st.eventTol; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const auto ym = d.eval(mid);
                    if (event(PhasePoint{ym[0], ym[1]}) >= 0.0)
                        hi = mid;
                    else
                        lo = mid;
                }
                const auto ye = d.eval(hi);
                return {hi, ye[2]};
            }
            ta = tb;
            fa = event(PhasePoint{ya[0], ya[1]});
        }
    }
}

} // namespace detail

// Theta over the passage with Dulac time T, via the trajectory route.
inline PassageIntegral theta_trajectory(const SaddleParams& params, const SectionConfig& sections,
                                        double T, double rho, const IntegratorSettings& settings,
                                        bool perturbed = false) {
    detail::check_rho(rho);
    if (!(T >= 10.0))
        throw Error("theta_trajectory needs T >= 10");
    IntegratorSettings st = settings;
    st.backend = FlowBackend::rk45;
    const double xi = invert_dulac_time(params, sections, T, st, perturbed);
    const double z0 = sections.zeta0;
    const auto [tev, theta] = detail::theta_run(
        params, {xi, sections.eta}, rho, st, perturbed,
        [z0](PhasePoint p) { return p.x - z0; });
    return PassageIntegral{rho, tev, theta, ThetaMethod::trajectory_quadrature};
}

namespace reduction {

// Scalar-route inversion of the Dulac time (unperturbed field, exponents
// only).  Bisection on log xi against the quadrature time.
inline double invert_time_scalar(const Exponents& e, double eta, double zeta0, double T,
                                 double guess_xi0, double tol = 1e-11) {
    auto timeAt = [&](double xi) {
        const double w = exit_omega(e, xi, eta, zeta0);
        return dulac_time(e, xi, eta, w, zeta0, tol);
    };
    const double xiCap = zeta0 * (1.0 - 1e-9);
    if (timeAt(xiCap) > T)
        throw TTooSmall("requested time below the minimal scalar passage time");
    const double guess =
        std::min(xiCap, guess_xi0 > 0.0 ? guess_xi0 * std::pow(T, -e.beta2) : 1e-4 * zeta0);
    double lo = guess, hi = guess;
    int guard = 0;
    while (timeAt(lo) < T) { // lo side: times above T
        lo /= 8.0;
        if (++guard > 200)
            throw NoConvergence("scalar inversion: bracketing failed from below");
    }
    guard = 0;
    while (hi < xiCap && timeAt(hi) > T) {
        hi = std::min(hi * 8.0, xiCap);
        if (++guard > 200)
            throw NoConvergence("scalar inversion: bracketing failed from above");
    }
    for (int it = 0; it < 200; ++it) {
        const double xi = std::sqrt(lo * hi);
        const double t = timeAt(xi);
        if (std::abs(t - T) <= 1e-10 * T)
            return xi;
        (t > T ? lo : hi) = xi;
        if (hi - lo <= 4e-16 * hi)
            return xi;
    }
    return std::sqrt(lo * hi);
}

} // namespace reduction

// Theta via the closed M-substitution form, with endpoints omega(T)/zeta0 and
// eta/xi(T) resolved through the scalar reduction (independent of the
// trajectory route).
inline PassageIntegral theta_m_form(const Exponents& e, const AsymptoticCoeffs& coeffs, double eta,
                                    double zeta0, double T, double rho) {
    detail::check_rho(rho);
    if (!(T >= 10.0))
        throw Error("theta_m_form needs T >= 10");
    const double xi = reduction::invert_time_scalar(e, eta, zeta0, T, coeffs.xi0);
    const double omega = reduction::exit_omega(e, xi, eta, zeta0);
    const double G = reduction::g_factor(e, xi, eta);
    const double J =
        quad::FamilyIntegral{reduction::theta_piece(e, rho)}(omega / zeta0, eta / xi);
    return PassageIntegral{rho, T, std::pow(G, 0.5 * rho - 1.0) * J, ThetaMethod::m_substitution};
}

struct ScalingFit {
    double rho = 0;
    double exponent = 0;    // slope of log Theta vs log T
    double logSlope = 0;    // slope of Theta vs log T
    double r2Power = 0;
    double r2Log = 0;
    bool logRegime = false; // flagged when growth is logarithmic rather than a power
    std::vector<double> Tgrid, theta;
};

inline ScalingFit scaling_fit(const SaddleParams& params, const SectionConfig& sections, double rho,
                              const std::vector<double>& Tgrid, const IntegratorSettings& settings,
                              unsigned threads = 0) {
    detail::check_rho(rho);
    if (Tgrid.size() < 3 || !(Tgrid.back() >= 100.0 * Tgrid.front()))
        throw Error("scaling fit needs a T grid spanning at least two decades");
    ScalingFit out;
    out.rho = rho;
    out.Tgrid = Tgrid;
    out.theta.resize(Tgrid.size());
    parallel_for(Tgrid.size(), threads, [&](std::size_t i) {
        out.theta[i] = theta_trajectory(params, sections, Tgrid[i], rho, settings).theta;
    });
    std::vector<double> lt(Tgrid.size()), lth(Tgrid.size());
    for (std::size_t i = 0; i < Tgrid.size(); ++i) {
        lt[i] = std::log(Tgrid[i]);
        lth[i] = std::log(out.theta[i]);
    }
    const LinFit power = linear_fit(lt, lth);
    const LinFit logf = linear_fit(lt, out.theta);
    out.exponent = power.slope;
    out.logSlope = logf.slope;
    out.r2Power = power.r2;
    out.r2Log = logf.r2;
    const double growth = out.theta.back() / out.theta.front();
    out.logRegime = std::abs(power.slope) < 0.15 && growth > 1.3;
    return out;
}

} // namespace nsl
