#pragma once

// Quadrature layer for the passage integrals.  Every integral of the family
//
//   int M^{p-1} (1+M^2)^{rho/2} (q0 + q1 M + q2 M^2)^{-st} dM
//
// over [a,b] within [0, inf] is reduced to smooth panels on [0,1]:
//  - split at M = 1,
//  - the tail piece maps to the mirrored integrand via M -> 1/M
//    (power at zero becomes 2 st - rho - p, quadratic reversed),
//  - the endpoint singularity M^{p-1} is removed by w = M^p; away from
//    zero a log substitution is used instead.
// Smooth panels go through Gauss-Kronrod.  A cumulative antiderivative
// table (dense cubic Hermite on the substituted variable) serves the
// Monte Carlo sampler where per-sample adaptive quadrature is too slow.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstddef>
#include <vector>

#include "nsl/saddle.hpp"

namespace nsl {

struct NonIntegrable : Error {
    using Error::Error;
};

namespace quad {

inline double gk(const std::function<double(double)>& f, double a, double b, double tol = 1e-11) {
    if (!(b > a))
        return 0.0;
    double err = 0;
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 15, tol, &err);
}

// One monotone family integrand piece restricted to M in [0, 1].
struct Piece {
    double p;  // power at zero: integrand ~ M^{p-1}
    double rho;
    double st; // exponent on the quadratic
    double q0, q1, q2;

    double smooth(double m) const { // integrand without the M^{p-1} factor
        const double quad = q0 + m * (q1 + m * q2);
        double f = std::pow(quad, -st);
        if (rho != 0.0)
            f *= std::pow(1.0 + m * m, 0.5 * rho);
        return f;
    }

    double value(double m) const { return std::pow(m, p - 1.0) * smooth(m); }

    // integral over [a,b] subset of [0,1]
    double integrate(double a, double b, double tol = 1e-11) const {
        if (!(b > a))
            return 0.0;
        if (a == 0.0) {
            if (!(p > 0.0))
                throw NonIntegrable("endpoint power <= 0 at M = 0");
            const double ip = 1.0 / p;
            return gk([this, ip](double w) { return smooth(std::pow(w, ip)) / p; }, 0.0,
                      std::pow(b, p), tol);
        }
        if (p >= 0.3) {
            const double ip = 1.0 / p;
            return gk([this, ip](double w) { return smooth(std::pow(w, ip)) / p; }, std::pow(a, p),
                      std::pow(b, p), tol);
        }
        return gk([this](double t) {
            const double m = std::exp(t);
            return std::pow(m, p) * smooth(m);
        }, std::log(a), std::log(b), tol);
    }

    Piece mirrored() const { return Piece{2.0 * st - rho - p, rho, st, q2, q1, q0}; }
};

// Full-range evaluator: split at M = 1, mirror the tail.
struct FamilyIntegral {
    Piece inner;

    double operator()(double a, double b, double tol = 1e-11) const {
        if (!(b > a))
            return 0.0;
        double s = 0.0;
        if (a < 1.0)
            s += inner.integrate(a, std::min(b, 1.0), tol);
        if (b > 1.0) {
            const Piece out = inner.mirrored();
            const double lo = std::isinf(b) ? 0.0 : 1.0 / b;
            s += out.integrate(lo, std::min(1.0 / a, 1.0), tol);
        }
        return s;
    }
};

// Cumulative antiderivative of a Piece in the substituted variable
// w = M^p on [0,1]: C(w) = (1/p) int_0^w smooth(w'^{1/p}) dw'.
// Dense grid + cubic Hermite; absolute accuracy ~1e-12 * scale.
class CumulativePiece {
  public:
    CumulativePiece() = default;

    CumulativePiece(const Piece& piece, std::size_t cells = 2048) : piece_(piece), n_(cells) {
        if (!(piece_.p > 0.0))
            throw NonIntegrable("cumulative table needs positive endpoint power");
        h_ = 1.0 / static_cast<double>(n_);
        val_.resize(n_ + 1);
        der_.resize(n_ + 1);
        const double ip = 1.0 / piece_.p;
        for (std::size_t j = 0; j <= n_; ++j)
            der_[j] = piece_.smooth(std::pow(j * h_, ip)) / piece_.p;
        val_[0] = 0.0;
        using GL = boost::math::quadrature::gauss<double, 8>;
        for (std::size_t j = 0; j < n_; ++j) {
            const double a = j * h_, b = a + h_;
            val_[j + 1] = val_[j] + GL::integrate(
                                        [this, ip](double w) { return piece_.smooth(std::pow(w, ip)) / piece_.p; },
                                        a, b);
        }
    }

    // C(M^p) for M in [0,1]
    double at_m(double m) const { return at_w(std::pow(m, piece_.p)); }

    double total() const { return val_.back(); }

    double at_w(double w) const {
        if (w <= 0.0)
            return 0.0;
        if (w >= 1.0)
            return val_.back();
        const double s = w / h_;
        std::size_t j = static_cast<std::size_t>(s);
        if (j >= n_)
            j = n_ - 1;
        const double th = s - static_cast<double>(j);
        const double y0 = val_[j], y1 = val_[j + 1];
        const double d0 = der_[j] * h_, d1 = der_[j + 1] * h_;
        const double th2 = th * th, th3 = th2 * th;
        return (2 * th3 - 3 * th2 + 1) * y0 + (th3 - 2 * th2 + th) * d0 +
               (-2 * th3 + 3 * th2) * y1 + (th3 - th2) * d1;
    }

  private:
    Piece piece_{1, 0, 0, 1, 0, 0};
    std::size_t n_ = 0;
    double h_ = 0;
    std::vector<double> val_, der_;
};

// Antiderivative F(M) = int_0^M of the family integrand over the whole
// half-line, assembled from the inner table and the mirrored tail table.
class CumulativeFamily {
  public:
    CumulativeFamily() = default;
    explicit CumulativeFamily(const Piece& inner, std::size_t cells = 2048)
        : in_(inner, cells), out_(inner.mirrored(), cells), pOut_(inner.mirrored().p) {}

    double operator()(double m) const {
        if (m <= 0.0)
            return 0.0;
        if (m <= 1.0)
            return in_.at_m(m);
        return in_.total() + out_.total() - out_.at_w(std::pow(m, -pOut_));
    }

    double total() const { return in_.total() + out_.total(); }

  private:
    CumulativePiece in_, out_;
    double pOut_ = 1.0;
};

} // namespace quad
} // namespace nsl
