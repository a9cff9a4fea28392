#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace nsl {

struct LinFit {
    double slope = 0;
    double intercept = 0;
    double r2 = 0;
};

inline LinFit linear_fit(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    LinFit out;
    if (n < 2)
        return out;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    out.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return out;
}

} // namespace nsl
