#pragma once

// Cubic neutral-saddle vector field family on the plane:
//
//   x' =  x (a0 x^2 + a1 x y + a2 y^2)
//   y' = -y (b0 x^2 + b1 x y + b2 y^2)
//
// with a first integral L available under the mixed-term admissibility
// condition a1/(v+1) = b1/(u+1).  This header owns parameter validation,
// the derived exponents, field evaluation and the exact first integral.

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace nsl {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct NegativeCoefficient : Error {
    using Error::Error;
};
struct DegenerateDelta : Error {
    using Error::Error;
};
struct EllipticityViolation : Error {
    using Error::Error;
};
struct MixedTermMismatch : Error {
    using Error::Error;
};
struct GammaOutOfRange : Error {
    using Error::Error;
};
struct NonPositivePoint : Error {
    using Error::Error;
};

struct PhasePoint {
    double x = 0.0;
    double y = 0.0;
};

// Optional O(4) remainder attached to the cubic field.  The two components
// must satisfy |(px,py)(x,y)| <= bound * (x^2+y^2)^2 on the chart; the bound
// is declared by the caller, not checked pointwise.
struct Perturbation {
    std::function<double(double, double)> px;
    std::function<double(double, double)> py;
    double bound = 0.0;

    bool active() const { return static_cast<bool>(px); }
};

inline Perturbation zero_perturbation() { return Perturbation{}; }

// Quartic test remainder K*(x^4, y^4); |.| <= K (x^2+y^2)^2.
inline Perturbation quartic_perturbation(double k) {
    Perturbation p;
    p.px = [k](double x, double) { return k * x * x * x * x; };
    p.py = [k](double, double y) { return k * y * y * y * y; };
    p.bound = k;
    return p;
}

struct SaddleParams {
    double a0 = 0, a1 = 0, a2 = 0;
    double b0 = 0, b1 = 0, b2 = 0;
    Perturbation perturbation;
};

struct Exponents {
    double u = 0, v = 0;
    double Delta = 0;
    double c0 = 0, c1 = 0, c2 = 0;
    double beta0 = 0, beta2 = 0;
    double betaStar = 0;
};

namespace detail {
constexpr double kAdmissibilityTol = 1e-12;
}

// Checks every family invariant and derives the exponents:
//   u = 2 b2 c0 / Delta,  v = 2 a0 c2 / Delta,
//   beta0 = (a0+b0)/(2 a0),  beta2 = (a2+b2)/(2 b2),
//   betaStar = min{1, a2/b2, b0/a0} / 2.
inline Exponents validate(const SaddleParams& p) {
    if (p.a0 < 0 || p.a2 < 0 || p.b0 < 0 || p.b2 < 0)
        throw NegativeCoefficient("a0, a2, b0, b2 must be non-negative");

    Exponents e;
    e.Delta = p.a2 * p.b0 - p.a0 * p.b2;
    e.c0 = p.a0 + p.b0;
    e.c1 = p.a1 + p.b1;
    e.c2 = p.a2 + p.b2;

    const double dscale = std::max(p.a2 * p.b0, p.a0 * p.b2);
    if (e.Delta == 0.0 || std::abs(e.Delta) <= 1e-14 * dscale)
        throw DegenerateDelta("Delta = a2 b0 - a0 b2 vanishes (invariant line degeneracy)");
    if (!(e.c1 * e.c1 < 4.0 * e.c0 * e.c2))
        throw EllipticityViolation("c1^2 >= 4 c0 c2");

    e.u = 2.0 * p.b2 * e.c0 / e.Delta;
    e.v = 2.0 * p.a0 * e.c2 / e.Delta;

    // Mixed-term admissibility in cross-multiplied form a1 (u+1) = b1 (v+1).
    const double lhs = p.a1 * (e.u + 1.0);
    const double rhs = p.b1 * (e.v + 1.0);
    const double mscale = std::max(std::abs(lhs), std::abs(rhs));
    if (std::abs(lhs - rhs) > detail::kAdmissibilityTol * mscale)
        throw MixedTermMismatch("a1/(v+1) != b1/(u+1)");

    e.beta0 = (p.a0 + p.b0) / (2.0 * p.a0);
    e.beta2 = (p.a2 + p.b2) / (2.0 * p.b2);
    e.betaStar = 0.5 * std::min({1.0, p.a2 / p.b2, p.b0 / p.a0});
    return e;
}

// One-parameter divergence-free family (1, g, 3, 3, g, 1), |g| < 4.
inline SaddleParams reduced_family(double gamma) {
    if (!(std::abs(gamma) < 4.0))
        throw GammaOutOfRange("reduced family requires |gamma| < 4");
    SaddleParams p;
    p.a0 = 1.0;
    p.a1 = gamma;
    p.a2 = 3.0;
    p.b0 = 3.0;
    p.b1 = gamma;
    p.b2 = 1.0;
    return p;
}

inline PhasePoint field_eval(const SaddleParams& p, PhasePoint q, bool perturbed = false) {
    PhasePoint v;
    v.x = q.x * (p.a0 * q.x * q.x + p.a1 * q.x * q.y + p.a2 * q.y * q.y);
    v.y = -q.y * (p.b0 * q.x * q.x + p.b1 * q.x * q.y + p.b2 * q.y * q.y);
    if (perturbed && p.perturbation.active()) {
        v.x += p.perturbation.px(q.x, q.y);
        v.y += p.perturbation.py(q.x, q.y);
    }
    return v;
}

// Divergence of the cubic part; identically zero iff 3a0 = b0, a2 = 3b2, a1 = b1.
inline double divergence_cubic(const SaddleParams& p, PhasePoint q) {
    return (3.0 * p.a0 - p.b0) * q.x * q.x + 2.0 * (p.a1 - p.b1) * q.x * q.y +
           (p.a2 - 3.0 * p.b2) * q.y * q.y;
}

inline bool is_divergence_free(const SaddleParams& p, double rel_tol = 1e-12) {
    const double s = std::max({p.a0, p.a2, p.b0, p.b2, std::abs(p.a1), std::abs(p.b1)});
    return std::abs(3.0 * p.a0 - p.b0) <= rel_tol * s && std::abs(p.a2 - 3.0 * p.b2) <= rel_tol * s &&
           std::abs(p.a1 - p.b1) <= rel_tol * s;
}

namespace detail {

// Quadratic-form coefficients of the bracket in L.  Under admissibility the
// bracket a0/v x^2 + a1/(v+1) xy + b2/u y^2 equals
// Delta/(2 c0 c2) * (c0 x^2 + c1 x y + c2 y^2), which is finite even when a0
// or b2 vanish and is determined by the exponents alone.
struct LCoeffs {
    double cxx, cxy, cyy, u, v;
};

inline LCoeffs l_coeffs(const Exponents& e) {
    LCoeffs c;
    c.u = e.u;
    c.v = e.v;
    c.cxx = e.Delta / (2.0 * e.c2);
    c.cyy = e.Delta / (2.0 * e.c0);
    c.cxy = e.c1 * e.Delta / (2.0 * e.c0 * e.c2);
    return c;
}

} // namespace detail

// First integral of the cubic field.  For Delta > 0,
//   L(x,y) = x^u y^v ( a0/v x^2 + a1/(v+1) x y + b2/u y^2 );
// for Delta < 0 the reciprocal of the same expression (a function of a first
// integral is a first integral), which carries the negated exponents.
inline double first_integral(const SaddleParams&, const Exponents& e, PhasePoint q) {
    if (!(q.x > 0.0) || !(q.y > 0.0))
        throw NonPositivePoint("first integral needs x > 0 and y > 0");
    const auto c = detail::l_coeffs(e);
    const double bracket = c.cxx * q.x * q.x + c.cxy * q.x * q.y + c.cyy * q.y * q.y;
    const double val = std::pow(q.x, c.u) * std::pow(q.y, c.v) * bracket;
    return e.Delta > 0.0 ? val : 1.0 / val;
}

inline double first_integral(const SaddleParams& p, PhasePoint q) {
    return first_integral(p, validate(p), q);
}

} // namespace nsl
