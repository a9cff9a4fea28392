#pragma once

// Scalar reduction of the saddle passage in the slope variable M = y/x.
// On a level set of the first integral the flow obeys
//
//   dM/dt = -G(xi,eta) M^{1-1/beta0} (c0 + c1 M + c2 M^2)^{1/(2 beta0) + 1/(2 beta2)}
//
// so passage times and the observable integrals become one-dimensional
// integrals between M_exit = omega/zeta0 and M_entry = eta/xi.  This header
// owns the G factor, the integrand pieces, and the level-set exit solver.

#include <array>
#include <cmath>
#include <optional>

#include "nsl/quad.hpp"
#include "nsl/saddle.hpp"

namespace nsl::reduction {

inline double s_exponent(const Exponents& e) { return 0.5 / e.beta0 + 0.5 / e.beta2; }

// G(xi, eta) = xi^{1/beta2} eta^{1/beta0} (c0 xi^2 + c1 xi eta + c2 eta^2)^{1 - s}
inline double g_factor(const Exponents& e, double xi, double eta) {
    const double q = e.c0 * xi * xi + e.c1 * xi * eta + e.c2 * eta * eta;
    return std::pow(xi, 1.0 / e.beta2) * std::pow(eta, 1.0 / e.beta0) *
           std::pow(q, 1.0 - s_exponent(e));
}

// Dulac-time integrand M^{1/beta0 - 1} (c0 + c1 M + c2 M^2)^{-s}.
inline quad::Piece dulac_piece(const Exponents& e) {
    return quad::Piece{1.0 / e.beta0, 0.0, s_exponent(e), e.c0, e.c1, e.c2};
}

// The exit-side variant M^{1/beta2 - 1} (c0 M^2 + c1 M + c2)^{-s} is the
// image of the entry-side integrand under M -> 1/M.
inline quad::Piece omega_piece(const Exponents& e) { return dulac_piece(e).mirrored(); }

// Observable integrand for Theta = int r^rho dt:
//   M^{(1-rho/2)/beta0 - 1} (1+M^2)^{rho/2} (c0+c1 M+c2 M^2)^{-s - rho/(u+v+2)}
inline quad::Piece theta_piece(const Exponents& e, double rho) {
    const double s = s_exponent(e);
    const double st = s + 0.5 * rho * (1.0 - s); // rho/(u+v+2) = rho (1-s)/2
    return quad::Piece{(1.0 - 0.5 * rho) / e.beta0, rho, st, e.c0, e.c1, e.c2};
}

namespace detail {

struct LevelFn {
    nsl::detail::LCoeffs lc;
    double zeta0;
    double target; // log-level at the entry point

    double bracket(double x, double y) const {
        return lc.cxx * x * x + lc.cxy * x * y + lc.cyy * y * y;
    }

    double log_level(double x, double y) const {
        return lc.u * std::log(x) + lc.v * std::log(y) + std::log(std::abs(bracket(x, y)));
    }

    double f(double w) const { return log_level(zeta0, w) - target; }

    double df(double w) const {
        return lc.v / w + (lc.cxy * zeta0 + 2.0 * lc.cyy * w) / bracket(zeta0, w);
    }
};

// Safeguarded Newton in l = log(w); the level function is close to affine in
// l over many decades, so this converges globally in a handful of steps.
inline double bisect_newton(const LevelFn& L, double lo, double hi, double flo, double fhi) {
    (void)fhi;
    double llo = std::log(lo), lhi = std::log(hi);
    double l = 0.5 * (llo + lhi);
    for (int it = 0; it < 200; ++it) {
        const double w = std::exp(l);
        const double fw = L.f(w);
        if (fw == 0.0)
            return w;
        if ((fw < 0) == (flo < 0))
            llo = l;
        else
            lhi = l;
        const double g = w * L.df(w); // d f / d log w
        double ln = l - fw / g;
        if (!(ln > llo) || !(ln < lhi))
            ln = 0.5 * (llo + lhi);
        if (std::abs(ln - l) <= 4e-16 * std::max(1.0, std::abs(l)))
            return std::exp(ln);
        l = ln;
    }
    return std::exp(l);
}

} // namespace detail

// Exit ordinate of the passage through (xi, eta): the first intersection of
// the level curve of L through (xi, eta) with the section {x = zeta0}, i.e.
// the largest positive root of L(zeta0, w) = L(xi, eta).  The level function
// along the section is piecewise monotone with at most two interior
// stationary points (roots of a quadratic), so the rightmost sign change
// brackets the wanted root.
inline double exit_omega(const Exponents& e, double xi, double eta, double zeta0) {
    detail::LevelFn L{nsl::detail::l_coeffs(e), zeta0, 0.0};
    L.target = L.log_level(xi, eta);

    // Stationary points of w -> log_level(zeta0, w):
    //   cyy (v+2) w^2 + cxy (v+1) zeta0 w + cxx v zeta0^2 = 0
    const auto& lc = L.lc;
    std::array<double, 4> brk{};
    int nb = 0;
    const double qa = lc.cyy * (lc.v + 2.0);
    const double qb = lc.cxy * (lc.v + 1.0) * zeta0;
    const double qc = lc.cxx * lc.v * zeta0 * zeta0;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc > 0.0 && qa != 0.0) {
        const double r = std::sqrt(disc);
        for (double s : {(-qb - r) / (2 * qa), (-qb + r) / (2 * qa)})
            if (s > 0.0)
                brk[nb++] = s;
        if (nb == 2 && brk[0] > brk[1])
            std::swap(brk[0], brk[1]);
    }

    // Outer endpoints: a tiny w and an expanded upper bound with a sign
    // change across the full range.
    double wlo = 1e-300;
    double whi = 4.0 * std::max(eta, zeta0);
    const double fhi_target_sign = L.f(wlo) < 0 ? 1.0 : -1.0;
    for (int it = 0; it < 80 && (L.f(whi) < 0) != (fhi_target_sign < 0); ++it)
        whi *= 4.0;

    std::array<double, 4> pts{};
    int np = 0;
    pts[np++] = wlo;
    for (int i = 0; i < nb; ++i)
        if (brk[i] > wlo && brk[i] < whi)
            pts[np++] = brk[i];
    pts[np++] = whi;

    for (int i = np - 1; i >= 1; --i) {
        const double a = pts[i - 1], b = pts[i];
        const double fa = L.f(a), fb = L.f(b);
        if (fa == 0.0)
            return a;
        if (fb == 0.0)
            return b;
        if ((fa < 0) != (fb < 0))
            return detail::bisect_newton(L, a, b, fa, fb);
    }
    throw Error("level-set exit solve found no crossing");
}

// Unperturbed Dulac time by quadrature of the reduced equation.
inline double dulac_time(const Exponents& e, double xi, double eta, double omega, double zeta0,
                         double tol = 1e-11) {
    const quad::FamilyIntegral F{dulac_piece(e)};
    return F(omega / zeta0, eta / xi, tol) / g_factor(e, xi, eta);
}

// Table-accelerated evaluator for Monte Carlo work: both the passage time
// and (optionally) a Theta integral from two antiderivative lookups.
class FastPassage {
  public:
    FastPassage(const SaddleParams& p, const Exponents& e) : params_(p), exp_(e) {
        dulacF_ = quad::CumulativeFamily(dulac_piece(e));
    }

    FastPassage(const SaddleParams& p, const Exponents& e, double rho) : FastPassage(p, e) {
        rho_ = rho;
        thetaF_ = quad::CumulativeFamily(theta_piece(e, rho));
    }

    const Exponents& exponents() const { return exp_; }

    double omega(double xi, double eta, double zeta0) const {
        return exit_omega(exp_, xi, eta, zeta0);
    }

    double time(double xi, double eta, double omega, double zeta0) const {
        return (dulacF_(eta / xi) - dulacF_(omega / zeta0)) / g_factor(exp_, xi, eta);
    }

    double theta(double xi, double eta, double omega, double zeta0) const {
        const double G = g_factor(exp_, xi, eta);
        const auto& F = *thetaF_;
        return std::pow(G, 0.5 * rho_ - 1.0) * (F(eta / xi) - F(omega / zeta0));
    }

    bool has_theta() const { return thetaF_.has_value(); }

  private:
    SaddleParams params_;
    Exponents exp_;
    quad::CumulativeFamily dulacF_;
    std::optional<quad::CumulativeFamily> thetaF_;
    double rho_ = 0.0;
};

} // namespace nsl::reduction
