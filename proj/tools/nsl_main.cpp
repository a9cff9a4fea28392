// nsl command-line front end.
//
//   nsl <validate|dulac|theta|tails|limits> [--config PATH] [--out DIR]
//       [--seed U64] [--threads N] [--plot] [--perturbed]
//
// A single JSON document configures a run; flags override config fields and
// the environment variable NSL_OUT overrides --out.  Exit codes: 0 success,
// 1 computational failure, 2 invalid configuration.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nsl/cli.hpp"

namespace {

const char* error_name(const nsl::Error& e) {
    if (dynamic_cast<const nsl::DegenerateDelta*>(&e))
        return "DegenerateDelta";
    if (dynamic_cast<const nsl::EllipticityViolation*>(&e))
        return "EllipticityViolation";
    if (dynamic_cast<const nsl::MixedTermMismatch*>(&e))
        return "MixedTermMismatch";
    if (dynamic_cast<const nsl::NegativeCoefficient*>(&e))
        return "NegativeCoefficient";
    if (dynamic_cast<const nsl::GammaOutOfRange*>(&e))
        return "GammaOutOfRange";
    if (dynamic_cast<const nsl::NonPositivePoint*>(&e))
        return "NonPositivePoint";
    if (dynamic_cast<const nsl::MaxStepsExceeded*>(&e))
        return "MaxStepsExceeded";
    if (dynamic_cast<const nsl::LeftDomain*>(&e))
        return "LeftDomain";
    if (dynamic_cast<const nsl::TTooSmall*>(&e))
        return "TTooSmall";
    if (dynamic_cast<const nsl::NoConvergence*>(&e))
        return "NoConvergence";
    if (dynamic_cast<const nsl::NonIntegrable*>(&e))
        return "NonIntegrable";
    if (dynamic_cast<const nsl::TooFewSamples*>(&e))
        return "TooFewSamples";
    if (dynamic_cast<const nsl::InfiniteMeanConfig*>(&e))
        return "InfiniteMeanConfig";
    return "Error";
}

bool is_config_error(const nsl::Error& e) {
    return dynamic_cast<const nsl::DegenerateDelta*>(&e) ||
           dynamic_cast<const nsl::EllipticityViolation*>(&e) ||
           dynamic_cast<const nsl::MixedTermMismatch*>(&e) ||
           dynamic_cast<const nsl::NegativeCoefficient*>(&e) ||
           dynamic_cast<const nsl::GammaOutOfRange*>(&e) ||
           dynamic_cast<const nsl::InfiniteMeanConfig*>(&e);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for cubic neutral saddles"};
    app.require_subcommand(1);

    std::string configPath;
    std::string outDir;
    std::uint64_t seed = 0;
    bool seedSet = false;
    unsigned threads = 0;
    bool threadsSet = false;
    bool plot = false, perturbed = false;

    for (const char* name : {"validate", "dulac", "theta", "tails", "limits"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", configPath, "JSON run configuration");
        sub->add_option("--out", outDir, "output directory");
        sub->add_option("--seed", seed, "RNG seed (stochastic commands)")
            ->each([&](const std::string&) { seedSet = true; });
        sub->add_option("--threads", threads, "worker thread cap")
            ->each([&](const std::string&) { threadsSet = true; });
        sub->add_flag("--plot", plot, "emit SVG plots");
        sub->add_flag("--perturbed", perturbed, "enable the O(4) remainder");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();

    nsl::cli::RunConfig cfg;
    try {
        nsl::io::json j = nsl::io::json::object();
        if (!configPath.empty()) {
            std::ifstream is(configPath);
            if (!is)
                throw nsl::Error("cannot open config file " + configPath);
            is >> j;
        }
        cfg = nsl::cli::parse_config(j);
    } catch (const std::exception& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return 2;
    }

    if (!outDir.empty())
        cfg.out = outDir;
    if (seedSet)
        cfg.seed = seed;
    if (threadsSet)
        cfg.threads = threads;
    if (plot)
        cfg.plot = true;
    if (perturbed)
        cfg.perturbed = true;

    if ((command == "tails" || command == "limits") && !cfg.seed) {
        std::cerr << "error: '" << command << "' needs a seed (--seed or config)\n";
        return 2;
    }

    try {
        if (command == "validate") {
            std::string text;
            nsl::cli::cmd_validate(cfg, text);
            std::cout << text;
        } else if (command == "dulac") {
            nsl::cli::cmd_dulac(cfg);
        } else if (command == "theta") {
            nsl::cli::cmd_theta(cfg);
        } else if (command == "tails") {
            nsl::cli::cmd_tails(cfg);
        } else if (command == "limits") {
            nsl::cli::cmd_limits(cfg);
        }
        return 0;
    } catch (const nsl::Error& e) {
        if (command == "validate") {
            nsl::io::json err;
            err["error"] = error_name(e);
            err["message"] = e.what();
            std::cout << err.dump(2) << "\n";
            return 2;
        }
        std::cerr << error_name(e) << ": " << e.what() << "\n";
        return is_config_error(e) ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
