#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

#include "sqha/dynamics.hpp"
#include "sqha/noise.hpp"
#include "sqha/potential.hpp"
#include "sqha/qpotential.hpp"
#include "sqha/spatial.hpp"
#include "sqha/tracers.hpp"

namespace sqha {

using Json = nlohmann::json;

// Run configuration, the JSON schema behind `sqha simulate` and friends:
// {
//   "grid":      {"N": 512, "L": 40.0},
//   "potential": {"family": "harmonic", "params": {"omega": 1.0}},
//   "quantum":   {"hbar": 1.0, "mass": 1.0},
//   "noise":     {"theta": 0.0, "k": 1.0, "mobility": 1.0, "f": 1.0},
//   "init":      {"gaussian": {"center": 0, "sigma": 1, "momentum": 0}},
//   "dt": 0.0,            // 0: use the stability bound
//   "steps": 1000,
//   "seed": 1,
//   "tracers":   {"count": 0, "placement": "quantile"},
//   "observe_every": 1,
//   "snapshot_every": 0   // 0: steps/10
// }
// A manifest (the config wrapped under a "config" key) is accepted anywhere
// a config is, so any run can be reproduced from its own manifest.
struct RunConfig {
    int grid_points = 512;
    double grid_length = 40.0;
    PotentialSpec potential = PotentialSpec::free();
    QuantumParams quantum;
    NoiseParams noise;
    double init_center = 0.0;
    double init_sigma = 1.0;
    double init_momentum = 0.0;
    double dt = 0.0;  // 0: resolve to the stability bound
    std::int64_t steps = 1000;
    std::uint64_t seed = 1;
    int tracer_count = 0;
    Placement tracer_placement = Placement::Quantile;
    std::int64_t observe_every = 1;
    std::int64_t snapshot_every = 0;  // 0: steps/10

    Grid1D grid() const { return Grid1D(grid_length, grid_points); }

    WaveField initial_state() const {
        return gaussian_packet(grid(), init_center, init_sigma, init_momentum, quantum);
    }

    // dt actually used: the requested one clamped to the stability bound.
    double resolved_dt() const {
        const Grid1D g = grid();
        const double bound = stability_dt_bound(g, quantum, potential.evaluate(g, quantum.mass));
        return dt > 0.0 ? std::min(dt, bound) : bound;
    }
};

namespace detail {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ConfigError, "cli",
                    std::string("bad value for '") + key + "': " + e.what());
    }
}

inline double require_number(const Json& j, const char* key, const char* ctx) {
    if (!j.contains(key))
        throw Error(ErrorCode::ConfigError, "cli",
                    std::string(ctx) + " is missing required field '" + key + "'");
    if (!j.at(key).is_number())
        throw Error(ErrorCode::ConfigError, "cli",
                    std::string(ctx) + " field '" + key + "' must be a number");
    return j.at(key).get<double>();
}

}  // namespace detail

inline PotentialSpec potential_from_json(const Json& j) {
    const std::string family = detail::get_or<std::string>(j, "family", "");
    const Json params = j.contains("params") ? j.at("params") : Json::object();
    if (family == "harmonic")
        return PotentialSpec::harmonic(detail::require_number(params, "omega", "harmonic"));
    if (family == "power_tail")
        return PotentialSpec::power_tail(detail::require_number(params, "amplitude", "power_tail"),
                                         detail::require_number(params, "kappa", "power_tail"));
    if (family == "lennard_jones_like")
        return PotentialSpec::lennard_jones_like(
            detail::require_number(params, "epsilon", "lennard_jones_like"),
            detail::require_number(params, "sigma", "lennard_jones_like"));
    if (family == "free") return PotentialSpec::free();
    if (family == "tabulated") {
        if (!params.contains("values") || !params.at("values").is_array())
            throw Error(ErrorCode::ConfigError, "cli", "tabulated potential needs values[]");
        return PotentialSpec::tabulated(params.at("values").get<std::vector<double>>());
    }
    throw Error(ErrorCode::ConfigError, "cli",
                "unknown potential family '" + family +
                    "' (harmonic|power_tail|lennard_jones_like|free|tabulated)");
}

inline Json potential_to_json(const PotentialSpec& p) {
    Json j;
    switch (p.family()) {
        case PotentialSpec::Family::Harmonic:
            j["family"] = "harmonic";
            j["params"] = {{"omega", p.omega()}};
            break;
        case PotentialSpec::Family::PowerTail:
            j["family"] = "power_tail";
            j["params"] = {{"amplitude", p.amplitude()}, {"kappa", p.kappa()}};
            break;
        case PotentialSpec::Family::LennardJonesLike:
            j["family"] = "lennard_jones_like";
            j["params"] = {{"epsilon", p.epsilon()}, {"sigma", p.sigma()}};
            break;
        case PotentialSpec::Family::Free:
            j["family"] = "free";
            j["params"] = Json::object();
            break;
        case PotentialSpec::Family::Tabulated:
            j["family"] = "tabulated";
            j["params"] = {{"values", p.table()}};
            break;
    }
    return j;
}

// Parse a potential spec string like "harmonic:1.0" or "power_tail:1.0,0.5".
inline PotentialSpec potential_from_string(const std::string& s) {
    const auto colon = s.find(':');
    const std::string family = s.substr(0, colon);
    std::vector<double> args;
    if (colon != std::string::npos) {
        std::string rest = s.substr(colon + 1);
        std::size_t pos = 0;
        while (pos < rest.size()) {
            std::size_t next = rest.find(',', pos);
            if (next == std::string::npos) next = rest.size();
            try {
                args.push_back(std::stod(rest.substr(pos, next - pos)));
            } catch (const std::exception&) {
                throw Error(ErrorCode::ConfigError, "cli",
                            "bad potential parameter in '" + s + "'");
            }
            pos = next + 1;
        }
    }
    auto need = [&](std::size_t n) {
        if (args.size() != n)
            throw Error(ErrorCode::ConfigError, "cli",
                        "potential '" + family + "' takes " + std::to_string(n) +
                            " parameters, got " + std::to_string(args.size()));
    };
    if (family == "harmonic") {
        need(1);
        return PotentialSpec::harmonic(args[0]);
    }
    if (family == "power_tail") {
        need(2);
        return PotentialSpec::power_tail(args[0], args[1]);
    }
    if (family == "lennard_jones_like" || family == "lj") {
        need(2);
        return PotentialSpec::lennard_jones_like(args[0], args[1]);
    }
    if (family == "free") {
        need(0);
        return PotentialSpec::free();
    }
    throw Error(ErrorCode::ConfigError, "cli", "unknown potential spec '" + s + "'");
}

inline RunConfig config_from_json(Json j) {
    // Accept a manifest: unwrap its embedded config.
    if (j.contains("config")) j = j.at("config");

    RunConfig c;
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        c.grid_points = static_cast<int>(detail::require_number(g, "N", "grid"));
        c.grid_length = detail::require_number(g, "L", "grid");
    }
    if (j.contains("potential")) c.potential = potential_from_json(j.at("potential"));
    if (j.contains("quantum")) {
        const auto& q = j.at("quantum");
        c.quantum.hbar = detail::get_or<double>(q, "hbar", 1.0);
        c.quantum.mass = detail::get_or<double>(q, "mass", 1.0);
    }
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        c.noise.theta = detail::get_or<double>(n, "theta", 0.0);
        c.noise.boltzmann = detail::get_or<double>(n, "k", 1.0);
        c.noise.mobility = detail::get_or<double>(n, "mobility", 1.0);
        c.noise.f = detail::get_or<double>(n, "f", 1.0);
    }
    c.noise.mass = c.quantum.mass;
    c.noise.hbar = c.quantum.hbar;
    if (j.contains("init")) {
        if (!j.at("init").contains("gaussian"))
            throw Error(ErrorCode::ConfigError, "cli", "init supports only a gaussian packet");
        const auto& g = j.at("init").at("gaussian");
        c.init_center = detail::get_or<double>(g, "center", 0.0);
        c.init_sigma = detail::require_number(g, "sigma", "init.gaussian");
        c.init_momentum = detail::get_or<double>(g, "momentum", 0.0);
    }
    c.dt = detail::get_or<double>(j, "dt", 0.0);
    c.steps = detail::get_or<std::int64_t>(j, "steps", 1000);
    c.seed = detail::get_or<std::uint64_t>(j, "seed", 1);
    if (j.contains("tracers")) {
        const auto& t = j.at("tracers");
        c.tracer_count = detail::get_or<int>(t, "count", 0);
        const std::string placement = detail::get_or<std::string>(t, "placement", "quantile");
        if (placement == "quantile") {
            c.tracer_placement = Placement::Quantile;
        } else if (placement == "uniform") {
            c.tracer_placement = Placement::Uniform;
        } else {
            throw Error(ErrorCode::ConfigError, "cli",
                        "tracer placement must be quantile or uniform");
        }
    }
    c.observe_every = detail::get_or<std::int64_t>(j, "observe_every", 1);
    c.snapshot_every = detail::get_or<std::int64_t>(j, "snapshot_every", 0);

    if (c.steps <= 0) throw Error(ErrorCode::ConfigError, "cli", "steps must be positive");
    if (c.observe_every <= 0)
        throw Error(ErrorCode::ConfigError, "cli", "observe_every must be positive");
    if (c.dt < 0.0) throw Error(ErrorCode::ConfigError, "cli", "dt must be >= 0");
    if (c.tracer_count < 0)
        throw Error(ErrorCode::ConfigError, "cli", "tracer count must be >= 0");
    c.quantum.validate();
    c.noise.validate();
    (void)c.grid();  // validates N and L
    return c;
}

inline Json config_to_json(const RunConfig& c) {
    Json j;
    j["grid"] = {{"N", c.grid_points}, {"L", c.grid_length}};
    j["potential"] = potential_to_json(c.potential);
    j["quantum"] = {{"hbar", c.quantum.hbar}, {"mass", c.quantum.mass}};
    j["noise"] = {{"theta", c.noise.theta},
                  {"k", c.noise.boltzmann},
                  {"mobility", c.noise.mobility},
                  {"f", c.noise.f}};
    j["init"] = {{"gaussian",
                  {{"center", c.init_center},
                   {"sigma", c.init_sigma},
                   {"momentum", c.init_momentum}}}};
    j["dt"] = c.dt;
    j["steps"] = c.steps;
    j["seed"] = c.seed;
    j["tracers"] = {{"count", c.tracer_count},
                    {"placement",
                     c.tracer_placement == Placement::Quantile ? "quantile" : "uniform"}};
    j["observe_every"] = c.observe_every;
    j["snapshot_every"] = c.snapshot_every;
    return j;
}

}  // namespace sqha
