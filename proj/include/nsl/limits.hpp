#pragma once

// Renewal-surrogate limit-law experiments.  Returns into the neighbourhood of
// the neutral orbit are drawn i.i.d. from the area-uniform entry strip; each
// return contributes tau = T + c_bdry and vbar = Theta(rho, T) + c_bdry plus
// an optional bounded nuisance.  Birkhoff sums are accumulated to a horizon t
// and normalized by sqrt(t) (rho > 0), sqrt(t log t) (rho = 0), or
// t^{(2 - rho)/4} (rho < 0).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "nsl/parallel.hpp"
#include "nsl/reduction.hpp"
#include "nsl/rng.hpp"
#include "nsl/stats.hpp"

namespace nsl {

struct InfiniteMeanConfig : Error {
    using Error::Error;
};

enum class Regime { gaussian_clt, nonstandard_clt, stable };

inline const char* regime_name(Regime r) {
    switch (r) {
    case Regime::gaussian_clt:
        return "gaussian_clt";
    case Regime::nonstandard_clt:
        return "nonstandard_clt";
    default:
        return "stable";
    }
}

struct LimitLawReport {
    double rho = 0;
    Regime regime = Regime::gaussian_clt;
    std::string scalingUsed;
    double stableIndexHat = std::numeric_limits<double>::quiet_NaN();
    double ksStatistic = 0;
    double pValue = 0;
    long nPaths = 0;
    double horizonT = 0;
    std::uint64_t seed = 0;
    // diagnostics beyond the headline fields
    double normalizedVariance = 0;   // variance of S_t / scaling across paths
    double sqrtTVariance = 0;        // variance of S_t / sqrt(t) across paths
    double meanRate = 0;             // calibration estimate of E[vbar]/E[tau]
    long totalRenewals = 0;
    long calibrationSamples = 0;
};

struct LimitConfig {
    double gamma = 0.0;
    double rho = 0.0;
    double horizonT = 1e4;
    long nPaths = 1000;
    std::uint64_t seed = 0;
    SectionConfig sections;
    double cBoundary = 1.0;
    bool nuisance = true;   // add U[-1,1] to each vbar
    long tailPoolSize = 200000; // i.i.d. pool for calibration and index fits
    unsigned threads = 0;
};

namespace detail {

// Asymptotic Kolmogorov-Smirnov tail probability.
inline double ks_pvalue(double d, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    double sum = 0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-12)
            break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// KS distance of the standardized sample against the standard normal.
inline std::pair<double, double> ks_vs_normal(std::vector<double> z) {
    const std::size_t n = z.size();
    double mean = 0;
    for (double v : z)
        mean += v;
    mean /= static_cast<double>(n);
    double var = 0;
    for (double v : z)
        var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    const double sd = std::sqrt(var);
    for (double& v : z)
        v = (v - mean) / sd;
    std::sort(z.begin(), z.end());
    double d = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double F = normal_cdf(z[i]);
        d = std::max(d, std::max(F - static_cast<double>(i) / n,
                                 static_cast<double>(i + 1) / n - F));
    }
    return {d, ks_pvalue(d, n)};
}

struct RenewalDraw {
    double tau, vbar;
};

// One i.i.d. renewal draw from the entry strip.
template <class Fast>
RenewalDraw draw_renewal(const Fast& fast, const SectionConfig& sec, double rho, double cB,
                         bool nuisance, CounterRng& rng) {
    const double xi = std::max(sec.xiMax * rng.next_unit(), 1e-300);
    const double eta = rng.next_in(sec.etaMin, sec.etaMax);
    const double w = fast.omega(xi, eta, sec.zeta0);
    const double T = fast.time(xi, eta, w, sec.zeta0);
    const double theta = (rho == 0.0) ? T : fast.theta(xi, eta, w, sec.zeta0);
    double vbar = theta + cB;
    if (nuisance)
        vbar += rng.next_in(-1.0, 1.0);
    return {T + cB, vbar};
}

} // namespace detail

inline LimitLawReport birkhoff_experiment(const LimitConfig& cfg) {
    if (!(cfg.rho > -2.0))
        throw InfiniteMeanConfig("rho <= -2 gives a tail index <= 1 (infinite mean)");
    if (!(cfg.rho < 1.0))
        throw Error("the limit-law experiment covers rho in (-2, 1)");
    if (cfg.nPaths < 2)
        throw Error("need at least 2 paths");
    cfg.sections.check();

    const SaddleParams params = reduced_family(cfg.gamma);
    const Exponents e = validate(params);
    const bool needTheta = cfg.rho != 0.0;
    const reduction::FastPassage fast = needTheta
                                            ? reduction::FastPassage(params, e, cfg.rho)
                                            : reduction::FastPassage(params, e);

    LimitLawReport rep;
    rep.rho = cfg.rho;
    rep.nPaths = cfg.nPaths;
    rep.horizonT = cfg.horizonT;
    rep.seed = cfg.seed;
    rep.regime = cfg.rho > 0.0 ? Regime::gaussian_clt
                               : (cfg.rho == 0.0 ? Regime::nonstandard_clt : Regime::stable);

    // Calibration pool: mean rate, and the vbar tail index for the stable
    // regime.  Stream 0 is reserved for pools, paths use streams >= 1.
    const long m = std::max<long>(cfg.tailPoolSize, 50000);
    std::vector<ReturnSample> pool(static_cast<std::size_t>(m));
    parallel_for(static_cast<std::size_t>(m), cfg.threads, [&](std::size_t i) {
        CounterRng rng(cfg.seed, 0);
        rng.set_counter(4 * i); // each draw owns a 4-slot slice of stream 0
        const auto d = detail::draw_renewal(fast, cfg.sections, cfg.rho, cfg.cBoundary,
                                            cfg.nuisance, rng);
        pool[i] = {d.tau, d.vbar};
    });
    double sumTau = 0, sumV = 0;
    for (const auto& s : pool) {
        sumTau += s.tau;
        sumV += s.vbar;
    }
    rep.meanRate = sumV / sumTau;
    rep.calibrationSamples = m;
    if (cfg.rho < 0.0)
        rep.stableIndexHat = stable_index(pool);

    // Path simulations: stream = path index + 1.
    std::vector<double> S(static_cast<std::size_t>(cfg.nPaths));
    std::vector<long> counts(static_cast<std::size_t>(cfg.nPaths));
    parallel_for(static_cast<std::size_t>(cfg.nPaths), cfg.threads, [&](std::size_t i) {
        CounterRng rng(cfg.seed, static_cast<std::uint64_t>(i) + 1);
        double cum = 0, sum = 0;
        long nr = 0;
        while (cum <= cfg.horizonT) {
            const auto d = detail::draw_renewal(fast, cfg.sections, cfg.rho, cfg.cBoundary,
                                                cfg.nuisance, rng);
            cum += d.tau;
            sum += d.vbar;
            ++nr;
        }
        S[i] = sum - rep.meanRate * cfg.horizonT;
        counts[i] = nr;
    });
    for (long c : counts)
        rep.totalRenewals += c;

    const double t = cfg.horizonT;
    double scale = 0;
    if (cfg.rho > 0.0) {
        scale = std::sqrt(t);
        rep.scalingUsed = "sqrt(t)";
    } else if (cfg.rho == 0.0) {
        scale = std::sqrt(t * std::log(t));
        rep.scalingUsed = "sqrt(t log t)";
    } else {
        scale = std::pow(t, (2.0 - cfg.rho) / 4.0);
        rep.scalingUsed = "t^((2-rho)/4)";
    }

    auto sample_variance = [](const std::vector<double>& v) {
        double m = 0;
        for (double x : v)
            m += x;
        m /= static_cast<double>(v.size());
        double s = 0;
        for (double x : v)
            s += (x - m) * (x - m);
        return s / static_cast<double>(v.size() - 1);
    };

    std::vector<double> z(S.size()), w(S.size());
    for (std::size_t i = 0; i < S.size(); ++i) {
        z[i] = S[i] / scale;
        w[i] = S[i] / std::sqrt(t);
    }
    rep.normalizedVariance = sample_variance(z);
    rep.sqrtTVariance = sample_variance(w);

    const auto [d, p] = detail::ks_vs_normal(z);
    rep.ksStatistic = d;
    rep.pValue = p;
    return rep;
}

} // namespace nsl
