#pragma once

// Test-side oracles, independent of the library's computational paths:
// closed Beta-function forms for the scaling integrals, finite-difference
// gradients, a stand-alone level-set solver, KS distance against the uniform
// law, and generators for random admissible parameter sets.

#include <cmath>
#include <functional>
#include <vector>

#include "nsl/rng.hpp"
#include "nsl/saddle.hpp"

namespace oracles {

// int_0^inf M^{a-1} (1+M^2)^{-b} dM = B(a/2, b - a/2) / 2
inline double half_line_beta(double a, double b) { return 0.5 * std::beta(0.5 * a, b - 0.5 * a); }

// Central finite-difference gradient of f at (x, y).
inline std::pair<double, double> fd_gradient(const std::function<double(double, double)>& f,
                                             double x, double y, double h) {
    return {(f(x + h, y) - f(x - h, y)) / (2 * h), (f(x, y + h) - f(x, y - h)) / (2 * h)};
}

// Solves L(zeta0, w) = level for the reduced family with gamma = 0, where
// L(x, y) = x y (x^2 + y^2); plain bisection, no shared code with the
// library's solver.
inline double exit_height_gamma0(double level, double zeta0) {
    auto f = [&](double w) { return zeta0 * w * (zeta0 * zeta0 + w * w) - level; };
    double lo = 0.0, hi = 1.0;
    while (f(hi) < 0)
        hi *= 2;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Kolmogorov-Smirnov distance of a sample against U[0,1], and its asymptotic
// p-value.
inline std::pair<double, double> ks_uniform(std::vector<double> u) {
    std::sort(u.begin(), u.end());
    const std::size_t n = u.size();
    double d = 0;
    for (std::size_t i = 0; i < n; ++i)
        d = std::max(d, std::max(u[i] - static_cast<double>(i) / n,
                                 static_cast<double>(i + 1) / n - u[i]));
    const double sn = std::sqrt(static_cast<double>(n));
    const double lam = (sn + 0.12 + 0.11 / sn) * d;
    double p = 0;
    for (int k = 1; k <= 100; ++k)
        p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
    return {d, std::clamp(p, 0.0, 1.0)};
}

// Random admissible parameter sets: mixes the reduced family, mixed-term
// families built to satisfy a1 (u+1) = b1 (v+1) exactly, and pure a1=b1=0
// families of either Delta sign.
inline std::vector<nsl::SaddleParams> random_admissible(std::size_t n, std::uint64_t seed) {
    std::vector<nsl::SaddleParams> out;
    nsl::CounterRng rng(seed, 7);
    while (out.size() < n) {
        const int kind = static_cast<int>(rng.next_u64() % 3);
        nsl::SaddleParams p;
        if (kind == 0) {
            p = nsl::reduced_family(rng.next_in(-3.5, 3.5));
        } else {
            p.a0 = rng.next_in(0.2, 3.0);
            p.a2 = rng.next_in(0.2, 3.0);
            p.b0 = rng.next_in(0.2, 3.0);
            p.b2 = rng.next_in(0.2, 3.0);
            const double Delta = p.a2 * p.b0 - p.a0 * p.b2;
            if (std::abs(Delta) < 0.05)
                continue;
            if (kind == 2) {
                const double c0 = p.a0 + p.b0, c2 = p.a2 + p.b2;
                const double u = 2 * p.b2 * c0 / Delta, v = 2 * p.a0 * c2 / Delta;
                if (std::abs(u + 1) < 0.1 || std::abs(v + 1) < 0.1)
                    continue;
                p.a1 = rng.next_in(-0.5, 0.5);
                p.b1 = p.a1 * (u + 1) / (v + 1);
                const double c1 = p.a1 + p.b1;
                if (!(c1 * c1 < 4 * c0 * c2 * 0.9))
                    continue;
            }
        }
        try {
            nsl::validate(p);
        } catch (const nsl::Error&) {
            continue;
        }
        out.push_back(p);
    }
    return out;
}

} // namespace oracles
