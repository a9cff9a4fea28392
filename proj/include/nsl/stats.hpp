#pragma once

// Monte Carlo layer over the saddle passages: area-uniform sampling of the
// entry strip, return-time samples tau = T + c_bdry with their observable
// increments, and heavy-tail index estimation (Hill / log-log regression).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "nsl/fit.hpp"
#include "nsl/flow.hpp"
#include "nsl/parallel.hpp"
#include "nsl/reduction.hpp"
#include "nsl/rng.hpp"

namespace nsl {

struct TooFewSamples : Error {
    using Error::Error;
};

struct ReturnSample {
    double tau = 0;
    double vbar = 0;
};

// n points uniform with respect to area in [0, xiMax] x [etaMin, etaMax].
inline std::vector<PhasePoint> sample_entry(const SectionConfig& sections, std::size_t n,
                                            std::uint64_t seed) {
    sections.check();
    std::vector<PhasePoint> out;
    out.reserve(n);
    CounterRng rng(seed, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = sections.xiMax * rng.next_unit();
        const double eta = rng.next_in(sections.etaMin, sections.etaMax);
        out.push_back({std::max(xi, 1e-300), eta});
    }
    return out;
}

struct TauSampleOptions {
    double rho = 0.0;       // observable order for vbar
    double cBoundary = 1.0; // bounded boundary correction added to T
    double tauCap = 1e9;    // samples beyond this are censored
    unsigned threads = 0;
};

struct TauSampleResult {
    std::vector<ReturnSample> samples;
    long censored = 0;
};

// tau = Dulac passage time + boundary constant; vbar = Theta(rho, T) + the
// same constant, so that the rho = 0 observable reduces to tau itself.
inline TauSampleResult tau_samples(const SaddleParams& params, const SectionConfig& sections,
                                   const std::vector<PhasePoint>& entries,
                                   const IntegratorSettings& settings,
                                   const TauSampleOptions& opts = {}) {
    sections.check();
    settings.check();
    const Exponents e = validate(params);
    TauSampleResult out;
    std::vector<ReturnSample> raw(entries.size());
    std::vector<char> ok(entries.size(), 0);

    if (settings.backend == FlowBackend::scalar_m) {
        const bool needTheta = opts.rho != 0.0;
        const reduction::FastPassage fast =
            needTheta ? reduction::FastPassage(params, e, opts.rho)
                      : reduction::FastPassage(params, e);
        parallel_for(entries.size(), opts.threads, [&](std::size_t i) {
            const auto [xi, eta] = entries[i];
            const double w = fast.omega(xi, eta, sections.zeta0);
            const double T = fast.time(xi, eta, w, sections.zeta0);
            if (!(T < opts.tauCap))
                return; // censored
            const double theta = needTheta ? fast.theta(xi, eta, w, sections.zeta0) : T;
            raw[i] = {T + opts.cBoundary, theta + opts.cBoundary};
            ok[i] = 1;
        });
    } else {
        parallel_for(entries.size(), opts.threads, [&](std::size_t i) {
            const auto [xi, eta] = entries[i];
            SectionConfig sec = sections;
            sec.eta = eta;
            try {
                DulacRecord r = passage(params, sec, xi, settings);
                if (!(r.T < opts.tauCap))
                    return;
                double theta = r.T;
                if (opts.rho != 0.0)
                    theta = std::pow(reduction::g_factor(e, xi, eta), 0.5 * opts.rho - 1.0) *
                            quad::FamilyIntegral{reduction::theta_piece(e, opts.rho)}(
                                r.omega / sections.zeta0, eta / xi);
                raw[i] = {r.T + opts.cBoundary, theta + opts.cBoundary};
                ok[i] = 1;
            } catch (const MaxStepsExceeded&) {
                // one retry with a larger budget, then censor
                try {
                    IntegratorSettings st2 = settings;
                    st2.maxSteps *= 4;
                    DulacRecord r = passage(params, sec, xi, st2);
                    raw[i] = {r.T + opts.cBoundary, r.T + opts.cBoundary};
                    ok[i] = 1;
                } catch (const MaxStepsExceeded&) {
                }
            }
        });
    }

    out.samples.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (ok[i])
            out.samples.push_back(raw[i]);
        else
            ++out.censored;
    }
    return out;
}

enum class TailMethod { hill, loglog_regression };

struct TailEstimate {
    double betaHat = 0;
    double Chat = 0;
    double ci95lo = 0, ci95hi = 0;
    long nSamples = 0;
    TailMethod method = TailMethod::hill;
};

struct TailFitOptions {
    double windowLo = 0, windowHi = 0; // regression window; 0 -> quantile defaults
    int bootstrap = 400;
    std::uint64_t bootstrapSeed = 12345;
};

// Hill estimator over the top k = sqrt(n) order statistics, with a bootstrap
// CI over the log-excesses; or least squares on the empirical survival
// function over a t-window.
inline TailEstimate tail_fit(std::vector<double> xs, TailMethod method,
                             const TailFitOptions& opts = {}) {
    const std::size_t n = xs.size();
    if (n < 10000)
        throw TooFewSamples("tail fit needs at least 1e4 samples");
    TailEstimate est;
    est.method = method;
    est.nSamples = static_cast<long>(n);

    if (method == TailMethod::hill) {
        const std::size_t k = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
        std::nth_element(xs.begin(), xs.begin() + k, xs.end(), std::greater<>());
        const double xk = xs[k]; // (k+1)-th largest
        std::vector<double> exc(k);
        for (std::size_t i = 0; i < k; ++i)
            exc[i] = std::log(xs[i] / xk);
        const double mean = std::accumulate(exc.begin(), exc.end(), 0.0) / static_cast<double>(k);
        est.betaHat = 1.0 / mean;
        est.Chat = (static_cast<double>(k) / static_cast<double>(n)) * std::pow(xk, est.betaHat);

        std::vector<double> boot(opts.bootstrap);
        CounterRng rng(opts.bootstrapSeed, 1);
        for (int b = 0; b < opts.bootstrap; ++b) {
            double s = 0;
            for (std::size_t i = 0; i < k; ++i)
                s += exc[rng.next_u64() % k];
            boot[b] = static_cast<double>(k) / s;
        }
        std::sort(boot.begin(), boot.end());
        est.ci95lo = boot[static_cast<std::size_t>(0.025 * opts.bootstrap)];
        est.ci95hi = boot[static_cast<std::size_t>(0.975 * opts.bootstrap)];
        return est;
    }

    // log-log regression of the survival function
    std::sort(xs.begin(), xs.end());
    double lo = opts.windowLo, hi = opts.windowHi;
    if (!(lo > 0) || !(hi > lo)) {
        lo = xs[static_cast<std::size_t>(0.90 * n)];
        hi = xs[n - n / 2000 - 1];
    }
    std::vector<double> lt, ls;
    const int grid = 25;
    for (int i = 0; i < grid; ++i) {
        const double t = lo * std::pow(hi / lo, static_cast<double>(i) / (grid - 1));
        const auto it = std::upper_bound(xs.begin(), xs.end(), t);
        const double surv = static_cast<double>(xs.end() - it) / static_cast<double>(n);
        if (surv > 0) {
            lt.push_back(std::log(t));
            ls.push_back(std::log(surv));
        }
    }
    if (lt.size() < 5)
        throw TooFewSamples("survival regression window has too few populated points");
    const LinFit f = linear_fit(lt, ls);
    est.betaHat = -f.slope;
    est.Chat = std::exp(f.intercept);
    // slope standard error from the residuals
    double mx = 0, sxx = 0, sse = 0;
    for (double v : lt)
        mx += v;
    mx /= static_cast<double>(lt.size());
    for (std::size_t i = 0; i < lt.size(); ++i) {
        sxx += (lt[i] - mx) * (lt[i] - mx);
        const double r = ls[i] - (f.intercept + f.slope * lt[i]);
        sse += r * r;
    }
    const double se = std::sqrt(sse / (static_cast<double>(lt.size()) - 2.0) / sxx);
    est.ci95lo = est.betaHat - 1.96 * se;
    est.ci95hi = est.betaHat + 1.96 * se;
    return est;
}

// Tail index of |vbar| (stable-order estimation); skew is the signed excess
// of positive over negative values among the top exceedances.
inline double stable_index(const std::vector<ReturnSample>& samples, double* skew = nullptr) {
    std::vector<double> mag(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        mag[i] = std::abs(samples[i].vbar);
    const TailEstimate est = tail_fit(mag, TailMethod::hill);
    if (skew) {
        const std::size_t k = static_cast<std::size_t>(std::sqrt(static_cast<double>(mag.size())));
        std::vector<std::size_t> idx(samples.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::nth_element(idx.begin(), idx.begin() + k, idx.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(samples[a].vbar) > std::abs(samples[b].vbar);
        });
        long pos = 0, neg = 0;
        for (std::size_t i = 0; i < k; ++i)
            (samples[idx[i]].vbar >= 0 ? pos : neg)++;
        *skew = static_cast<double>(pos - neg) / static_cast<double>(k);
    }
    return est.betaHat;
}

} // namespace nsl
