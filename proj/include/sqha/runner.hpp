#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sqha/classical_limit.hpp"
#include "sqha/config.hpp"
#include "sqha/parallel.hpp"
#include "sqha/range_analysis.hpp"
#include "sqha/reversibility.hpp"
#include "sqha/version.hpp"

namespace sqha {

namespace fs = std::filesystem;

// %.17g round-trips doubles exactly; every CSV cell goes through here so
// reruns stay byte-identical.
inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::ofstream open_output(const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error(ErrorCode::ConfigError, "cli", "cannot write " + path.string());
    return os;
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// manifest.json: the merged config plus every resolved parameter. Feeding a
// manifest back through --config reproduces the run's CSV outputs byte for
// byte (the provenance block is the only part that differs).
inline void write_manifest(const fs::path& dir, const RunConfig& config, Json resolved,
                           Json extra = Json::object()) {
    Json m;
    m["config"] = config_to_json(config);
    m["resolved"] = std::move(resolved);
    m["provenance"] = {{"tool", kToolName}, {"version", kVersion}, {"created_utc", utc_timestamp()}};
    for (auto& [key, value] : extra.items()) m[key] = value;
    open_output(dir / "manifest.json") << m.dump(2) << "\n";
}

inline Json resolved_parameters(const RunConfig& c) {
    Json r;
    const Grid1D g = c.grid();
    const double bound = stability_dt_bound(g, c.quantum, c.potential.evaluate(g, c.quantum.mass));
    r["dt_bound"] = bound;
    r["dt_used"] = c.resolved_dt();
    r["dt_clamped"] = c.dt > 0.0 && c.dt > bound;
    r["grid_spacing"] = g.spacing();
    if (c.noise.theta > 0.0) r["lambda_c"] = correlation_length(c.noise);
    return r;
}

inline Json range_report_to_json(const RangeReport& r) {
    Json j;
    if (r.lambda_q.has_value()) {
        j["lambda_q"] = *r.lambda_q;
    } else {
        j["lambda_q"] = "DIVERGENT";
    }
    j["converged"] = r.converged;
    j["integral_value"] = r.integral_value;
    j["denominator"] = r.denominator;
    j["tail_ratio"] = r.tail_ratio;
    j["tail_exponent_estimate"] = r.tail_exponent_estimate;
    j["lambda_c"] = r.lambda_c;
    j["q_max"] = r.q_max;
    return j;
}

// --------------------------------------------------------------------------
// simulate
// --------------------------------------------------------------------------

inline constexpr std::uint64_t kSimulateTag = 0x73696d75ull;

inline void run_simulate(const RunConfig& c, const fs::path& outdir) {
    fs::create_directories(outdir);
    const Grid1D grid = c.grid();
    const ScalarField pot = c.potential.evaluate(grid, c.quantum.mass);
    const double dt = c.resolved_dt();
    if (c.noise.theta > 0.0) (void)correlation_length(c.noise);  // resolvability below
    const Propagator prop(grid, pot, c.quantum, dt);

    SimState state{c.initial_state(), 0.0, 0};
    const bool tracers_on = c.tracer_count > 0;
    TracerEnsemble tracers;
    ScalarField f_old = ScalarField::zeros(grid);
    if (tracers_on) {
        tracers = place_tracers(state.psi, c.tracer_count, c.tracer_placement, c.quantum);
        f_old = total_force_field(pot, state.psi.density(), c.quantum);
    }

    const std::int64_t snapshot_every =
        c.snapshot_every > 0 ? c.snapshot_every : std::max<std::int64_t>(1, c.steps / 10);

    auto obs = open_output(outdir / "observables.csv");
    obs << "t[time],norm[1],energy[energy],mean_q[length],mean_q2[length^2],H_qu[energy]\n";
    std::ofstream trc;
    if (tracers_on) {
        trc = open_output(outdir / "tracers.csv");
        trc << "t[time],id[1],q[length],p[momentum],flagged[1]\n";
    }

    auto emit_observables = [&](const SimState& s) {
        const auto n = s.psi.density();
        obs << fmt(s.time) << "," << fmt(1.0 + s.norm_drift) << ","
            << fmt(total_energy(s.psi, pot, c.quantum)) << "," << fmt(mean_q(s.psi)) << ","
            << fmt(mean_q2(s.psi)) << "," << fmt(quantum_energy(n, c.quantum)) << "\n";
    };
    auto emit_tracers = [&](double t) {
        for (int i = 0; i < tracers.count(); ++i)
            trc << fmt(t) << "," << i << "," << fmt(tracers.q[i]) << "," << fmt(tracers.p[i])
                << "," << int(tracers.flagged[i]) << "\n";
    };
    auto emit_snapshot = [&](const SimState& s) {
        char name[64];
        std::snprintf(name, sizeof(name), "density_%08lld.csv",
                      static_cast<long long>(s.step));
        auto snap = open_output(outdir / name);
        write_field_csv(snap, s.psi.density(), "n[1/length]");
    };

    emit_observables(state);
    if (tracers_on) emit_tracers(0.0);
    emit_snapshot(state);

    for (std::int64_t i = 0; i < c.steps; ++i) {
        step_stochastic_inplace(state, prop, c.noise,
                                RngStream::derive(c.seed, 0, static_cast<std::uint64_t>(i),
                                                  kSimulateTag));
        if (tracers_on) {
            const DensityField n = state.psi.density();
            const ScalarField f_new = total_force_field(pot, n, c.quantum);
            advance_tracers(tracers, f_old, f_new, dt, c.quantum.mass);
            flag_tracers(tracers, n);
            f_old = f_new;
        }
        if ((i + 1) % c.observe_every == 0 || i + 1 == c.steps) {
            emit_observables(state);
            if (tracers_on) emit_tracers(state.time);
        }
        if ((i + 1) % snapshot_every == 0 || i + 1 == c.steps) emit_snapshot(state);
    }

    write_manifest(outdir, c, resolved_parameters(c));
}

// --------------------------------------------------------------------------
// reversal-scan
// --------------------------------------------------------------------------

struct ScanRequest {
    std::vector<double> thetas;
    double horizon = 1.0;
    int trials = 100;
    int jobs = 0;
    bool replay_noise = false;
};

inline std::vector<AsymmetryResult> run_reversal_scan(const RunConfig& c, const ScanRequest& req,
                                                      const fs::path& outdir,
                                                      const std::string& csv_name = "scan.csv") {
    fs::create_directories(outdir);
    const double dt = c.resolved_dt();
    ReversalOptions opt;
    opt.jobs = req.jobs;
    opt.replay_noise = req.replay_noise;
    auto rows = asymmetry_scan(c.initial_state(), c.potential, c.quantum, c.noise, req.thetas,
                               dt, req.horizon, req.trials, c.seed, opt);

    auto csv = open_output(outdir / csv_name);
    csv << "theta[temperature],mean_A[1],stderr_A[1],mean_fidelity_deficit[1],trials[1]\n";
    Json failures = Json::array();
    for (const auto& r : rows) {
        if (r.failed()) {
            csv << fmt(r.theta) << ",nan,nan,nan," << r.trials << "\n";
            failures.push_back({{"theta", r.theta}, {"error", r.error}});
        } else {
            csv << fmt(r.theta) << "," << fmt(r.mean_asymmetry) << ","
                << fmt(r.stderr_asymmetry) << "," << fmt(r.mean_fidelity_deficit) << ","
                << r.trials << "\n";
        }
    }

    Json resolved = resolved_parameters(c);
    resolved["thetas"] = req.thetas;
    resolved["horizon"] = req.horizon;
    resolved["trials"] = req.trials;
    resolved["replay_noise"] = req.replay_noise;
    Json extra;
    extra["failures"] = failures;
    write_manifest(outdir, c, resolved, extra);
    return rows;
}

// --------------------------------------------------------------------------
// range
// --------------------------------------------------------------------------

inline RangeReport run_range(const RunConfig& c, const fs::path& outdir,
                             const std::string& report_name = "report.json") {
    fs::create_directories(outdir);
    RangeProfile profile{ScalarField::zeros(c.grid()), ScalarField::zeros(c.grid()),
                         ScalarField::zeros(c.grid())};
    ClassifyOptions copt;
    if (c.noise.theta > 0.0) {
        const double lc = correlation_length(c.noise);
        if (lc < 0.45 * c.grid_length) copt.lambda_c = lc;
    }
    const RangeReport rep = classify_tail(c.potential, c.quantum, c.grid(), copt, &profile);

    open_output(outdir / report_name) << range_report_to_json(rep).dump(2) << "\n";

    auto csv = open_output(outdir / "profile.csv");
    csv << "q[length],V_qu[energy],force[energy/length],integrand[energy/length^2]\n";
    const Grid1D g = profile.v_qu.grid();
    for (int j = 0; j < g.points(); ++j)
        csv << fmt(g.node(j)) << "," << fmt(profile.v_qu[j]) << "," << fmt(profile.force[j])
            << "," << fmt(profile.integrand[j]) << "\n";

    write_manifest(outdir, c, resolved_parameters(c));
    return rep;
}

// --------------------------------------------------------------------------
// noise-validate
// --------------------------------------------------------------------------

struct NoiseValidateRequest {
    int samples = 10000;
    int jobs = 0;
};

inline CovarianceReport run_noise_validate(const RunConfig& c, const NoiseValidateRequest& req,
                                           const fs::path& outdir,
                                           const std::string& csv_name = "cov.csv") {
    fs::create_directories(outdir);
    if (c.noise.theta <= 0.0)
        throw Error(ErrorCode::ConfigError, "cli", "noise-validate needs theta > 0");
    const Grid1D grid = c.grid();
    const double lambda_c = correlation_length(c.noise);

    std::vector<NoiseField> samples;
    samples.reserve(req.samples);
    for (int i = 0; i < req.samples; ++i)
        samples.emplace_back(ScalarField::zeros(grid), lambda_c, c.seed);
    parallel_for(req.samples, req.jobs, [&](int i) {
        RngStream rng = RngStream::derive(c.seed, static_cast<std::uint64_t>(i), 0, 0);
        samples[i] = sample_noise(grid, c.noise, 1.0, rng, c.seed);
    });

    const auto rep = validate_noise(samples, c.noise.variance_prefactor(lambda_c));

    auto csv = open_output(outdir / csv_name);
    csv << "delta[length],empirical[energy^2],theoretical[energy^2]\n";
    for (std::size_t l = 0; l < rep.lag.size(); ++l)
        csv << fmt(rep.lag[l]) << "," << fmt(rep.empirical[l]) << "," << fmt(rep.theoretical[l])
            << "\n";

    Json resolved = resolved_parameters(c);
    resolved["samples"] = req.samples;
    resolved["fitted_lambda_c"] = rep.fitted_lambda_c;
    resolved["c0_empirical"] = rep.c0_empirical;
    resolved["c0_theoretical"] = rep.c0_theoretical;
    resolved["max_abs_deviation"] = rep.max_abs_deviation;
    write_manifest(outdir, c, resolved);
    return rep;
}

// --------------------------------------------------------------------------
// classical-compare
// --------------------------------------------------------------------------

inline Json limit_report_to_json(const LimitReport& r) {
    Json j;
    j["domain_length"] = r.domain_length;
    j["lambda_c"] = std::isfinite(r.lambda_c) ? Json(r.lambda_c) : Json("INFINITE");
    j["lambda_q"] = r.lambda_q.has_value() ? Json(*r.lambda_q) : Json("DIVERGENT");
    j["lambda_c_ratio"] =
        std::isfinite(r.lambda_c_ratio) ? Json(r.lambda_c_ratio) : Json("INFINITE");
    if (r.lambda_q_ratio.has_value()) {
        j["lambda_q_ratio"] = *r.lambda_q_ratio;
    } else {
        j["lambda_q_ratio"] = "DIVERGENT";
    }
    j["trajectory_divergence"] = r.divergence;
    j["classical_regime"] = r.classical_regime;
    j["kick_rate"] = r.kick_rate;
    j["bulk_quantum_force"] = r.bulk_quantum_force;
    j["bulk_classical_force"] = r.bulk_classical_force;
    if (r.range_computed) j["range"] = range_report_to_json(r.range);
    return j;
}

inline void write_tracer_series_csv(const fs::path& path, const std::vector<double>& time,
                                    const std::vector<TracerEnsemble>& series) {
    auto csv = open_output(path);
    csv << "t[time],id[1],q[length],p[momentum],flagged[1]\n";
    for (std::size_t i = 0; i < series.size(); ++i)
        for (int k = 0; k < series[i].count(); ++k)
            csv << fmt(time[i]) << "," << k << "," << fmt(series[i].q[k]) << ","
                << fmt(series[i].p[k]) << "," << int(series[i].flagged[k]) << "\n";
}

inline LimitReport run_classical_compare(const RunConfig& c, const fs::path& outdir,
                                         const std::string& report_name = "limit.json") {
    fs::create_directories(outdir);
    LimitOptions opt;
    if (c.tracer_count > 0) opt.tracer_count = c.tracer_count;
    opt.placement = c.tracer_placement;

    LimitTrajectories traj;
    const LimitReport rep =
        compare_limit(c.potential, c.quantum, c.noise, c.grid(), c.initial_state(),
                      c.resolved_dt(), static_cast<int>(c.steps), c.seed, opt, &traj);

    open_output(outdir / report_name) << limit_report_to_json(rep).dump(2) << "\n";
    write_tracer_series_csv(outdir / "sqha_tracers.csv", traj.time, traj.sqha);
    write_tracer_series_csv(outdir / "classical_tracers.csv", traj.time, traj.classical_ref);

    Json resolved = resolved_parameters(c);
    resolved["kick_rate"] = rep.kick_rate;
    write_manifest(outdir, c, resolved);
    return rep;
}

}  // namespace sqha
