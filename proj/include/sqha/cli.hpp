#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sqha/runner.hpp"

namespace sqha::cli {

// Exit codes: 0 success, 2 config error, 3 numerical-regime error
// (NOISE_TOO_STRONG, UNRESOLVED_CORRELATION, ...), 4 non-convergence.
// Failures also emit one machine-readable JSON object on standard error.

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3 };

inline LogLevel log_level_from_env() {
    const char* env = std::getenv("SQHA_LOG");
    if (env == nullptr) return LogLevel::Warn;
    const std::string v = env;
    if (v == "debug") return LogLevel::Debug;
    if (v == "info") return LogLevel::Info;
    if (v == "warn") return LogLevel::Warn;
    if (v == "error") return LogLevel::Error;
    return LogLevel::Warn;
}

class Logger {
  public:
    Logger(std::ostream& err) : err_(err), level_(log_level_from_env()) {}
    void log(LogLevel level, const std::string& msg) const {
        static const char* names[] = {"debug", "info", "warn", "error"};
        if (level >= level_)
            err_ << "[sqha][" << names[static_cast<int>(level)] << "] " << msg << "\n";
    }
    void info(const std::string& m) const { log(LogLevel::Info, m); }
    void warn(const std::string& m) const { log(LogLevel::Warn, m); }

  private:
    std::ostream& err_;
    LogLevel level_;
};

inline Json load_json_file(const fs::path& path) {
    std::ifstream is(path);
    if (!is)
        throw Error(ErrorCode::ConfigError, "cli", "cannot read config " + path.string());
    try {
        return Json::parse(is);
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ConfigError, "cli",
                    "config " + path.string() + " is not valid JSON: " + e.what());
    }
}

// --out may name a directory or a single .json/.csv artifact inside one.
struct OutSpec {
    fs::path dir;
    std::string name;  // empty: use the subcommand default
};

inline OutSpec parse_out(const std::string& out) {
    fs::path p(out);
    const std::string ext = p.extension().string();
    if (ext == ".json" || ext == ".csv") {
        OutSpec spec;
        spec.dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
        spec.name = p.filename().string();
        return spec;
    }
    return OutSpec{p, ""};
}

inline std::vector<double> parse_theta_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw Error(ErrorCode::ConfigError, "cli", "bad theta value '" + item + "'");
        }
    }
    if (out.empty()) throw Error(ErrorCode::ConfigError, "cli", "empty theta list");
    return out;
}

inline void parse_grid_arg(const std::string& s, RunConfig& c) {
    const auto comma = s.find(',');
    if (comma == std::string::npos)
        throw Error(ErrorCode::ConfigError, "cli", "--grid wants N,L");
    try {
        c.grid_points = std::stoi(s.substr(0, comma));
        c.grid_length = std::stod(s.substr(comma + 1));
    } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigError, "cli", "--grid wants N,L, got '" + s + "'");
    }
}

struct CommonOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    std::optional<std::int64_t> steps;
    std::optional<double> theta;

    void apply(RunConfig& c) const {
        if (seed) c.seed = *seed;
        if (dt) c.dt = *dt;
        if (steps) c.steps = *steps;
        if (theta) c.noise.theta = *theta;
    }
};

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    Logger logger(err);

    CLI::App app{"stochastic quantum hydrodynamics sandbox (1-D)"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolName) + " " + kVersion);

    std::string config_path, out_path, potential_str, grid_str, theta_list;
    CommonOverrides overrides;
    int jobs = 0;
    int trials = 100;
    int samples = 10000;
    double horizon = 1.0;
    bool replay_noise = false;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* copt = sub->add_option("--config", config_path, "run configuration JSON (or a manifest)");
        if (needs_config) copt->required();
        sub->add_option("--out", out_path, "output directory (or artifact path)")->required();
        sub->add_option("--seed", [&](const CLI::results_t& r) {
            overrides.seed = std::stoull(r[0]);
            return true;
        }, "master seed (overrides config)");
        sub->add_option("--dt", [&](const CLI::results_t& r) {
            overrides.dt = std::stod(r[0]);
            return true;
        }, "time step (overrides config; clamped to the stability bound)");
        sub->add_option("--steps", [&](const CLI::results_t& r) {
            overrides.steps = std::stoll(r[0]);
            return true;
        }, "step count (overrides config)");
        sub->add_option("--theta", [&](const CLI::results_t& r) {
            overrides.theta = std::stod(r[0]);
            return true;
        }, "noise amplitude (overrides config)");
        sub->add_option("--jobs", jobs, "worker count (0: all cores)");
    };

    auto* simulate = app.add_subcommand("simulate", "evolve one stochastic realization");
    add_common(simulate, true);

    auto* scan = app.add_subcommand("reversal-scan", "forward/backward asymmetry vs theta");
    add_common(scan, true);
    scan->add_option("--thetas", theta_list,
                     "ascending list, first entry 0 (or config key scan.thetas)");
    scan->add_option("--horizon", horizon,
                     "one-way evolution time (or config key scan.horizon)");
    scan->add_option("--trials", trials, "trials per theta (or config key scan.trials)");
    scan->add_flag("--replay-noise", replay_noise,
                   "replay forward noise on the backward leg instead of fresh draws");

    auto* range = app.add_subcommand("range", "quantum-potential range of interaction");
    add_common(range, false);
    range->add_option("--potential", potential_str,
                      "potential spec, e.g. harmonic:1.0 or power_tail:1.0,0.5");
    range->add_option("--grid", grid_str, "grid as N,L (with --potential)");

    auto* noisev = app.add_subcommand("noise-validate", "covariance statistics of the noise");
    add_common(noisev, false);
    noisev->add_option("--grid", grid_str, "grid as N,L");
    noisev->add_option("--samples", samples,
                       "sample count >= 1000 (or config key noise_validate.samples)");

    auto* compare = app.add_subcommand("classical-compare",
                                       "stochastic tracers vs classical Langevin reference");
    add_common(compare, true);

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            // --help and --version land here.
            return app.exit(e, out, err);
        }
        Json j;
        j["error"] = {{"code", "CONFIG_ERROR"}, {"module", "cli"}, {"message", e.what()}};
        err << j.dump() << "\n";
        return 2;
    }

    try {
        const OutSpec spec = parse_out(out_path);

        if (simulate->parsed()) {
            RunConfig c = config_from_json(load_json_file(config_path));
            overrides.apply(c);
            Json resolved = resolved_parameters(c);
            if (resolved["dt_clamped"].get<bool>())
                logger.warn("dt clamped to the stability bound " +
                            fmt(resolved["dt_bound"].get<double>()));
            run_simulate(c, spec.dir);
            logger.info("simulate done: " + spec.dir.string());
            return 0;
        }

        if (scan->parsed()) {
            Json raw = load_json_file(config_path);
            RunConfig c = config_from_json(raw);
            overrides.apply(c);
            if (raw.contains("config")) raw = raw.at("config");
            const Json scan_cfg = raw.contains("scan") ? raw.at("scan") : Json::object();

            ScanRequest req;
            if (scan->count("--thetas") > 0) {
                req.thetas = parse_theta_list(theta_list);
            } else if (scan_cfg.contains("thetas")) {
                req.thetas = scan_cfg.at("thetas").get<std::vector<double>>();
            } else {
                throw Error(ErrorCode::ConfigError, "cli",
                            "reversal-scan needs --thetas or config scan.thetas");
            }
            if (scan->count("--horizon") > 0) {
                req.horizon = horizon;
            } else if (scan_cfg.contains("horizon")) {
                req.horizon = scan_cfg.at("horizon").get<double>();
            } else {
                throw Error(ErrorCode::ConfigError, "cli",
                            "reversal-scan needs --horizon or config scan.horizon");
            }
            req.trials = scan->count("--trials") > 0
                             ? trials
                             : detail::get_or<int>(scan_cfg, "trials", trials);
            req.replay_noise = replay_noise || detail::get_or<bool>(scan_cfg, "replay_noise", false);
            req.jobs = jobs;
            auto rows = run_reversal_scan(c, req, spec.dir,
                                          spec.name.empty() ? "scan.csv" : spec.name);
            for (const auto& r : rows)
                if (r.failed()) logger.warn("theta " + fmt(r.theta) + " failed: " + r.error);
            return 0;
        }

        if (range->parsed()) {
            RunConfig c;
            if (!config_path.empty()) {
                c = config_from_json(load_json_file(config_path));
            } else if (!potential_str.empty()) {
                c.potential = potential_from_string(potential_str);
                // Default analysis domains sized so the stationary density
                // decays well before the wrap point.
                switch (c.potential.family()) {
                    case PotentialSpec::Family::Harmonic:
                        c.grid_points = 512;
                        c.grid_length = 12.0;
                        break;
                    default:
                        c.grid_points = 1024;
                        c.grid_length = 24.0;
                        break;
                }
            } else {
                throw Error(ErrorCode::ConfigError, "cli",
                            "range needs --potential or --config");
            }
            if (!grid_str.empty()) parse_grid_arg(grid_str, c);
            overrides.apply(c);
            const auto rep =
                run_range(c, spec.dir, spec.name.empty() ? "report.json" : spec.name);
            logger.info(std::string("lambda_q ") +
                        (rep.lambda_q ? fmt(*rep.lambda_q) : std::string("DIVERGENT")));
            return 0;
        }

        if (noisev->parsed()) {
            RunConfig c;
            Json raw = Json::object();
            if (!config_path.empty()) {
                raw = load_json_file(config_path);
                c = config_from_json(raw);
                if (raw.contains("config")) raw = raw.at("config");
            }
            if (!grid_str.empty()) parse_grid_arg(grid_str, c);
            overrides.apply(c);
            NoiseValidateRequest req;
            const Json nv_cfg =
                raw.contains("noise_validate") ? raw.at("noise_validate") : Json::object();
            req.samples = noisev->count("--samples") > 0
                              ? samples
                              : detail::get_or<int>(nv_cfg, "samples", samples);
            req.jobs = jobs;
            run_noise_validate(c, req, spec.dir, spec.name.empty() ? "cov.csv" : spec.name);
            return 0;
        }

        if (compare->parsed()) {
            RunConfig c = config_from_json(load_json_file(config_path));
            overrides.apply(c);
            const auto rep =
                run_classical_compare(c, spec.dir, spec.name.empty() ? "limit.json" : spec.name);
            logger.info("classical_regime " + std::string(rep.classical_regime ? "true" : "false"));
            return 0;
        }
    } catch (const Error& e) {
        Json j;
        j["error"] = {{"code", std::string(to_string(e.code()))},
                      {"module", e.module()},
                      {"message", e.what()}};
        err << j.dump() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        Json j;
        j["error"] = {{"code", "INTERNAL"}, {"module", "cli"}, {"message", e.what()}};
        err << j.dump() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace sqha::cli
