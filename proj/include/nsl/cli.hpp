#pragma once

// Command implementations behind the CLI: resolve a JSON run configuration,
// dispatch to the analysis modules, persist CSV/JSON artifacts (and optional
// SVG plots).  Kept in a header so the test suite can drive commands
// in-process.
//
// Precedence for the output directory: NSL_OUT > --out > config "out".
// CLI flags override config fields.  Exit codes: 0 ok, 1 computational
// failure, 2 invalid configuration.

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nsl/dulac.hpp"
#include "nsl/flow.hpp"
#include "nsl/io.hpp"
#include "nsl/limits.hpp"
#include "nsl/observables.hpp"
#include "nsl/stats.hpp"
#include "nsl/svg.hpp"

namespace nsl::cli {

using io::json;

struct RunConfig {
    // field family: either the reduced one-parameter family or explicit
    // coefficients
    std::optional<double> gamma;
    SaddleParams params;
    bool perturbed = false;
    double perturbK = 0.5;

    SectionConfig sections;
    IntegratorSettings integrator;

    std::optional<std::uint64_t> seed;
    std::string out = "out";
    bool plot = false;
    unsigned threads = 0;

    // dulac
    double dulacTmin = 1e2, dulacTmax = 1e4;
    int dulacNT = 9;
    Amplitude dulacAmplitude = Amplitude::analytic;
    double dulacAnchorT = 0.0;

    // theta
    double thetaRho = 1.0;
    double thetaTmin = 1e3, thetaTmax = 1e5;
    int thetaNT = 7;

    // tails
    long tailsN = 1000000;
    TailMethod tailsMethod = TailMethod::hill;
    double tailsRho = 0.0;
    double cBoundary = 1.0;
    double tailsWindowLo = 0.0, tailsWindowHi = 0.0;
    bool tailsDumpSamples = true;

    // limits
    double limitsRho = -1.0;
    double limitsHorizonT = 1e4;
    long limitsNPaths = 10000;
    bool limitsNuisance = true;
    long limitsTailPool = 200000;

    SaddleParams resolved_params() const {
        SaddleParams p = gamma ? reduced_family(*gamma) : params;
        if (perturbed)
            p.perturbation = quartic_perturbation(perturbK);
        return p;
    }
};

inline RunConfig parse_config(const json& j) {
    RunConfig c;
    if (j.contains("gamma"))
        c.gamma = j.at("gamma").get<double>();
    if (j.contains("params")) {
        const auto& p = j.at("params");
        c.params.a0 = p.value("a0", 0.0);
        c.params.a1 = p.value("a1", 0.0);
        c.params.a2 = p.value("a2", 0.0);
        c.params.b0 = p.value("b0", 0.0);
        c.params.b1 = p.value("b1", 0.0);
        c.params.b2 = p.value("b2", 0.0);
        c.gamma.reset();
        if (j.contains("gamma"))
            throw Error("config must give either gamma or params, not both");
    } else if (!j.contains("gamma")) {
        c.gamma = 0.0;
    }
    c.perturbed = j.value("perturbed", false);
    c.perturbK = j.value("perturbK", 0.5);

    if (j.contains("sections")) {
        const auto& s = j.at("sections");
        c.sections.eta = s.value("eta", c.sections.eta);
        c.sections.zeta0 = s.value("zeta0", c.sections.zeta0);
        c.sections.etaMin = s.value("etaMin", c.sections.etaMin);
        c.sections.etaMax = s.value("etaMax", c.sections.etaMax);
        c.sections.xiMax = s.value("xiMax", c.sections.xiMax);
        c.sections.boxX = s.value("boxX", 0.0);
        c.sections.boxY = s.value("boxY", 0.0);
    }
    if (j.contains("integrator")) {
        const auto& s = j.at("integrator");
        c.integrator.relTol = s.value("relTol", c.integrator.relTol);
        c.integrator.absTol = s.value("absTol", c.integrator.absTol);
        c.integrator.maxSteps = s.value("maxSteps", c.integrator.maxSteps);
        c.integrator.eventTol = s.value("eventTol", c.integrator.eventTol);
        const std::string b = s.value("backend", "rk45");
        if (b == "rk45")
            c.integrator.backend = FlowBackend::rk45;
        else if (b == "scalar")
            c.integrator.backend = FlowBackend::scalar_m;
        else
            throw Error("unknown integrator backend '" + b + "'");
    }
    if (j.contains("seed"))
        c.seed = j.at("seed").get<std::uint64_t>();
    c.out = j.value("out", c.out);
    c.plot = j.value("plot", false);
    c.threads = j.value("threads", 0u);

    if (j.contains("dulac")) {
        const auto& s = j.at("dulac");
        c.dulacTmin = s.value("Tmin", c.dulacTmin);
        c.dulacTmax = s.value("Tmax", c.dulacTmax);
        c.dulacNT = s.value("nT", c.dulacNT);
        const std::string a = s.value("amplitude", "analytic");
        if (a == "analytic")
            c.dulacAmplitude = Amplitude::analytic;
        else if (a == "calibrated")
            c.dulacAmplitude = Amplitude::calibrated;
        else
            throw Error("unknown amplitude mode '" + a + "'");
        c.dulacAnchorT = s.value("anchorT", 0.0);
    }
    if (j.contains("theta")) {
        const auto& s = j.at("theta");
        c.thetaRho = s.value("rho", c.thetaRho);
        c.thetaTmin = s.value("Tmin", c.thetaTmin);
        c.thetaTmax = s.value("Tmax", c.thetaTmax);
        c.thetaNT = s.value("nT", c.thetaNT);
    }
    if (j.contains("tails")) {
        const auto& s = j.at("tails");
        c.tailsN = s.value("n", c.tailsN);
        c.tailsRho = s.value("rho", c.tailsRho);
        c.cBoundary = s.value("cBoundary", c.cBoundary);
        c.tailsWindowLo = s.value("windowLo", 0.0);
        c.tailsWindowHi = s.value("windowHi", 0.0);
        c.tailsDumpSamples = s.value("dumpSamples", true);
        const std::string m = s.value("method", "hill");
        if (m == "hill")
            c.tailsMethod = TailMethod::hill;
        else if (m == "loglog_regression")
            c.tailsMethod = TailMethod::loglog_regression;
        else
            throw Error("unknown tail method '" + m + "'");
    }
    if (j.contains("limits")) {
        const auto& s = j.at("limits");
        c.limitsRho = s.value("rho", c.limitsRho);
        c.limitsHorizonT = s.value("horizonT", c.limitsHorizonT);
        c.limitsNPaths = s.value("nPaths", c.limitsNPaths);
        c.limitsNuisance = s.value("nuisance", true);
        c.limitsTailPool = s.value("tailPoolSize", c.limitsTailPool);
        c.cBoundary = s.value("cBoundary", c.cBoundary);
    }
    return c;
}

// Exact resolved configuration, echoed into every report.  The output
// directory is delivery metadata and deliberately not part of the echo, so a
// rerun from the echo into any directory reproduces the same bytes.
inline json echo_config(const RunConfig& c) {
    json j;
    if (c.gamma)
        j["gamma"] = *c.gamma;
    else
        j["params"] = {{"a0", c.params.a0}, {"a1", c.params.a1}, {"a2", c.params.a2},
                       {"b0", c.params.b0}, {"b1", c.params.b1}, {"b2", c.params.b2}};
    j["perturbed"] = c.perturbed;
    j["perturbK"] = c.perturbK;
    j["sections"] = {{"eta", c.sections.eta},       {"zeta0", c.sections.zeta0},
                     {"etaMin", c.sections.etaMin}, {"etaMax", c.sections.etaMax},
                     {"xiMax", c.sections.xiMax},   {"boxX", c.sections.boxX},
                     {"boxY", c.sections.boxY}};
    j["integrator"] = {{"relTol", c.integrator.relTol},
                       {"absTol", c.integrator.absTol},
                       {"maxSteps", c.integrator.maxSteps},
                       {"eventTol", c.integrator.eventTol},
                       {"backend", c.integrator.backend == FlowBackend::rk45 ? "rk45" : "scalar"}};
    if (c.seed)
        j["seed"] = *c.seed;
    j["plot"] = c.plot;
    j["threads"] = c.threads;
    j["dulac"] = {{"Tmin", c.dulacTmin},
                  {"Tmax", c.dulacTmax},
                  {"nT", c.dulacNT},
                  {"amplitude", c.dulacAmplitude == Amplitude::analytic ? "analytic" : "calibrated"},
                  {"anchorT", c.dulacAnchorT}};
    j["theta"] = {{"rho", c.thetaRho}, {"Tmin", c.thetaTmin}, {"Tmax", c.thetaTmax}, {"nT", c.thetaNT}};
    j["tails"] = {{"n", c.tailsN},
                  {"method", c.tailsMethod == TailMethod::hill ? "hill" : "loglog_regression"},
                  {"rho", c.tailsRho},
                  {"cBoundary", c.cBoundary},
                  {"windowLo", c.tailsWindowLo},
                  {"windowHi", c.tailsWindowHi},
                  {"dumpSamples", c.tailsDumpSamples}};
    j["limits"] = {{"rho", c.limitsRho},
                   {"horizonT", c.limitsHorizonT},
                   {"nPaths", c.limitsNPaths},
                   {"nuisance", c.limitsNuisance},
                   {"tailPoolSize", c.limitsTailPool},
                   {"cBoundary", c.cBoundary}};
    return j;
}

inline std::filesystem::path out_dir(const RunConfig& c) {
    if (const char* env = std::getenv("NSL_OUT"); env && *env)
        return env;
    return c.out;
}

inline std::vector<double> geometric_grid(double lo, double hi, int n) {
    if (!(hi > lo) || n < 2)
        throw Error("grid needs hi > lo and at least 2 points");
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i)
        g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    return g;
}

// validate: exponent summary on stdout, error JSON on failure.
inline int cmd_validate(const RunConfig& cfg, std::string& outText) {
    const SaddleParams p = cfg.resolved_params();
    const Exponents e = validate(p);
    json j;
    j["u"] = e.u;
    j["v"] = e.v;
    j["Delta"] = e.Delta;
    j["beta0"] = e.beta0;
    j["beta2"] = e.beta2;
    j["betaStar"] = e.betaStar;
    j["c"] = {e.c0, e.c1, e.c2};
    j["divergenceFree"] = is_divergence_free(p);
    j["config"] = echo_config(cfg);
    outText = j.dump(2) + "\n";
    return 0;
}

inline void cmd_dulac(const RunConfig& cfg) {
    const SaddleParams p = cfg.resolved_params();
    const auto grid = geometric_grid(cfg.dulacTmin, cfg.dulacTmax, cfg.dulacNT);
    StudyOptions opts;
    opts.amplitude = cfg.dulacAmplitude;
    opts.anchorT = cfg.dulacAnchorT;
    opts.threads = cfg.threads;
    const ConvergenceReport rep =
        convergence_study(p, cfg.sections, grid, cfg.perturbed, cfg.integrator, opts);

    const auto dir = out_dir(cfg);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < grid.size(); ++i)
        rows.push_back({grid[i], rep.xiMeasured[i], rep.xiAsymptotic[i], rep.relErrors[i]});
    io::write_csv(dir / "dulac.csv", {"T", "xi_measured", "xi_asymptotic", "rel_error"}, rows);

    json j;
    j["fittedLeadingExponent"] = rep.fittedLeadingExponent;
    j["fittedOmegaExponent"] = rep.fittedOmegaExponent;
    j["fittedErrorExponent"] = rep.fittedErrorExponent;
    j["regressionR2"] = rep.regressionR2;
    j["amplitudeUsed"] = rep.amplitudeUsed;
    j["calibrated"] = rep.calibrated;
    j["Tgrid"] = rep.Tgrid;
    j["xiMeasured"] = rep.xiMeasured;
    j["xiAsymptotic"] = rep.xiAsymptotic;
    j["relErrors"] = rep.relErrors;
    j["omegaMeasured"] = rep.omegaMeasured;
    j["config"] = echo_config(cfg);
    io::write_json(dir / "dulac.json", j);

    if (cfg.plot) {
        svg::Series meas{rep.Tgrid, rep.xiMeasured, "#1f77b4", true};
        svg::Series asym{rep.Tgrid, rep.xiAsymptotic, "#d62728", true};
        io::atomic_write(dir / "dulac.svg",
                         svg::plot({meas, asym}, {true, true, "T", "xi", "measured vs asymptotic"}));
        svg::Series err{rep.Tgrid, rep.relErrors, "#2ca02c", true};
        io::atomic_write(dir / "dulac_error.svg",
                         svg::plot({err}, {true, true, "T", "relative error", "prediction error"}));
    }
}

inline void cmd_theta(const RunConfig& cfg) {
    const SaddleParams p = cfg.resolved_params();
    const auto grid = geometric_grid(cfg.thetaTmin, cfg.thetaTmax, cfg.thetaNT);
    const ScalingFit fit =
        scaling_fit(p, cfg.sections, cfg.thetaRho, grid, cfg.integrator, cfg.threads);

    const auto dir = out_dir(cfg);
    {
        std::string csv = "rho,T,theta,method\n";
        for (std::size_t i = 0; i < grid.size(); ++i)
            csv += io::fmt17(cfg.thetaRho) + "," + io::fmt17(grid[i]) + "," +
                   io::fmt17(fit.theta[i]) + ",trajectory_quadrature\n";
        io::atomic_write(dir / "theta.csv", csv);
    }

    json j;
    j["rho"] = cfg.thetaRho;
    j["exponent"] = fit.exponent;
    j["logSlope"] = fit.logSlope;
    j["r2Power"] = fit.r2Power;
    j["r2Log"] = fit.r2Log;
    j["logRegime"] = fit.logRegime;
    j["Tgrid"] = fit.Tgrid;
    j["theta"] = fit.theta;
    j["config"] = echo_config(cfg);
    io::write_json(dir / "theta.json", j);

    if (cfg.plot)
        io::atomic_write(dir / "theta.svg",
                         svg::plot({svg::Series{fit.Tgrid, fit.theta, "#1f77b4", true}},
                                   {true, true, "T", "Theta", "observable growth"}));
}

inline void cmd_tails(const RunConfig& cfg) {
    if (!cfg.seed)
        throw Error("tails is a stochastic command and needs a seed");
    const SaddleParams p = cfg.resolved_params();
    const auto entries = sample_entry(cfg.sections, static_cast<std::size_t>(cfg.tailsN), *cfg.seed);
    TauSampleOptions topts;
    topts.rho = cfg.tailsRho;
    topts.cBoundary = cfg.cBoundary;
    topts.threads = cfg.threads;
    IntegratorSettings st = cfg.integrator;
    if (!cfg.perturbed)
        st.backend = FlowBackend::scalar_m;
    const TauSampleResult res = tau_samples(p, cfg.sections, entries, st, topts);

    std::vector<double> taus(res.samples.size());
    for (std::size_t i = 0; i < res.samples.size(); ++i)
        taus[i] = res.samples[i].tau;
    TailFitOptions fopts;
    fopts.windowLo = cfg.tailsWindowLo;
    fopts.windowHi = cfg.tailsWindowHi;
    fopts.bootstrapSeed = *cfg.seed;
    const TailEstimate est = tail_fit(taus, cfg.tailsMethod, fopts);

    const auto dir = out_dir(cfg);
    if (cfg.tailsDumpSamples) {
        std::vector<std::vector<double>> rows;
        rows.reserve(res.samples.size());
        for (const auto& s : res.samples)
            rows.push_back({s.tau, s.vbar});
        io::write_csv(dir / "tails.csv", {"tau", "vbar"}, rows);
    }

    json j;
    j["betaHat"] = est.betaHat;
    j["Chat"] = est.Chat;
    j["ci95"] = {est.ci95lo, est.ci95hi};
    j["nSamples"] = est.nSamples;
    j["method"] = est.method == TailMethod::hill ? "hill" : "loglog_regression";
    j["censored"] = res.censored;
    j["rngName"] = CounterRng::kName;
    j["seed"] = *cfg.seed;
    j["config"] = echo_config(cfg);
    io::write_json(dir / "tails.json", j);

    if (cfg.plot) {
        std::sort(taus.begin(), taus.end());
        std::vector<double> tx, sy;
        const std::size_t n = taus.size();
        for (int i = 0; i < 60; ++i) {
            const std::size_t k = static_cast<std::size_t>(n * (1.0 - std::pow(10.0, -4.0 * i / 59.0)));
            if (k >= n - 1)
                break;
            tx.push_back(taus[k]);
            sy.push_back(static_cast<double>(n - k) / static_cast<double>(n));
        }
        io::atomic_write(dir / "tails.svg",
                         svg::plot({svg::Series{tx, sy, "#1f77b4", true}},
                                   {true, true, "t", "P(tau > t)", "return-time survival"}));
    }
}

inline void cmd_limits(const RunConfig& cfg) {
    if (!cfg.seed)
        throw Error("limits is a stochastic command and needs a seed");
    LimitConfig lc;
    if (!cfg.gamma)
        throw Error("the limit-law experiment runs on the reduced family (give gamma)");
    lc.gamma = *cfg.gamma;
    lc.rho = cfg.limitsRho;
    lc.horizonT = cfg.limitsHorizonT;
    lc.nPaths = cfg.limitsNPaths;
    lc.seed = *cfg.seed;
    lc.sections = cfg.sections;
    lc.cBoundary = cfg.cBoundary;
    lc.nuisance = cfg.limitsNuisance;
    lc.tailPoolSize = cfg.limitsTailPool;
    lc.threads = cfg.threads;
    const LimitLawReport rep = birkhoff_experiment(lc);

    json j;
    j["rho"] = rep.rho;
    j["regime"] = regime_name(rep.regime);
    j["scalingUsed"] = rep.scalingUsed;
    if (!std::isnan(rep.stableIndexHat))
        j["stableIndexHat"] = rep.stableIndexHat;
    j["ksStatistic"] = rep.ksStatistic;
    j["pValue"] = rep.pValue;
    j["nPaths"] = rep.nPaths;
    j["horizonT"] = rep.horizonT;
    j["seed"] = rep.seed;
    j["normalizedVariance"] = rep.normalizedVariance;
    j["sqrtTVariance"] = rep.sqrtTVariance;
    j["meanRate"] = rep.meanRate;
    j["totalRenewals"] = rep.totalRenewals;
    j["calibrationSamples"] = rep.calibrationSamples;
    j["rngName"] = CounterRng::kName;
    j["renewalSurrogate"] = true; // i.i.d. renewal approximation of returns
    j["config"] = echo_config(cfg);
    io::write_json(out_dir(cfg) / "limits.json", j);
}

} // namespace nsl::cli
