#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "sqha/dynamics.hpp"
#include "sqha/noise.hpp"
#include "sqha/range_analysis.hpp"
#include "sqha/tracers.hpp"

namespace sqha {

// Large-scale limit experiment: evolve the full stochastic dynamics with
// Bohmian tracers next to a classical Langevin reference started from the
// same tracers, and measure how far the two trajectory sets drift apart.
// Classicality is reported as the scale separation lambda_c << L and
// lambda_q << L, never as an absolute divergence threshold.

namespace detail {
inline constexpr std::uint64_t kSqhaLeg = 0x73716861ull;
inline constexpr std::uint64_t kClassicalLeg = 0x636c6173ull;
inline constexpr std::uint64_t kCalibration = 0x63616c69ull;
}  // namespace detail

// Classical stochastic reference: velocity-Verlet in -grad V plus momentum
// kicks of the given variance rate, same seed-derivation contract as the
// main dynamics.
inline std::vector<TracerEnsemble> classical_reference(const PotentialSpec& v,
                                                       const Grid1D& grid,
                                                       TracerEnsemble ensemble,
                                                       const QuantumParams& qp,
                                                       double kick_variance_rate, double dt,
                                                       int steps, std::uint64_t seed) {
    qp.validate();
    const ScalarField force = classical_force_field(v.evaluate(grid, qp.mass));
    std::vector<TracerEnsemble> series;
    series.reserve(steps + 1);
    series.push_back(ensemble);
    for (int i = 0; i < steps; ++i) {
        advance_tracers(ensemble, force, force, dt, qp.mass);
        kick_tracers(ensemble, kick_variance_rate, dt, seed, i);
        series.push_back(ensemble);
    }
    return series;
}

// Convenience calibration when no empirical rate is available: variance rate
// k * Theta * m per unit time.
inline double default_kick_rate(const NoiseParams& np, const QuantumParams& qp) {
    return np.boltzmann * np.theta * qp.mass;
}

struct LimitOptions {
    int tracer_count = 64;
    Placement placement = Placement::Quantile;
    double regime_threshold = 0.1;   // both scale ratios must sit below this
    int calibration_steps = 200;     // empirical kick-rate pre-pass length
    double bulk_fraction = 0.01;     // bulk = density above this times peak
    bool zero_quantum_force = false; // diagnostic: SQHA tracers without Vqu
};

struct LimitReport {
    double domain_length = 0.0;
    double lambda_c = std::numeric_limits<double>::infinity();
    std::optional<double> lambda_q;  // empty: divergent or not computable
    double lambda_c_ratio = std::numeric_limits<double>::infinity();
    std::optional<double> lambda_q_ratio;
    double divergence = 0.0;  // time-averaged RMS tracer distance / L
    bool classical_regime = false;
    double kick_rate = 0.0;  // calibrated classical kick variance rate
    double bulk_quantum_force = 0.0;    // time-averaged bulk max |grad Vqu|
    double bulk_classical_force = 0.0;  // time-averaged bulk max |grad V|
    RangeReport range;
    bool range_computed = false;
};

struct LimitTrajectories {
    std::vector<double> time;
    std::vector<TracerEnsemble> sqha;
    std::vector<TracerEnsemble> classical_ref;
};

namespace detail {

struct SqhaLegResult {
    std::vector<TracerEnsemble> series;
    double force_jump_sq_mean = 0.0;  // mean (dF)^2 at tracer positions
};

// Bulk force magnitudes along the zero-noise twin of the run. The noisy
// state cannot carry this statistic: the Laplacian in Vqu amplifies a
// density ripple of relative size eps at wavenumber k by eps*k^2, so the
// node-max of |grad Vqu| is dominated by curvature-amplified noise wrinkles
// at any noise power. The premise being checked concerns the systematic
// quantum force, which the deterministic twin isolates.
struct BulkForceStats {
    double quantum = 0.0;    // time-averaged bulk max |grad Vqu|
    double classical = 0.0;  // time-averaged bulk max |grad V|
};

inline BulkForceStats bulk_force_stats(const Propagator& prop, const ScalarField& pot,
                                       const QuantumParams& qp, WaveField psi, int steps,
                                       double bulk_fraction) {
    const Grid1D& grid = prop.grid();
    const ScalarField f_classical = classical_force_field(pot);
    double q_acc = 0.0, c_acc = 0.0;
    for (int i = 0; i < steps; ++i) {
        prop.step(psi);
        const DensityField n = psi.density();
        const ScalarField fq = quantum_force(n, qp, 0.0, Scheme::Central);
        double nmax = 0.0;
        for (double v : n.values()) nmax = std::max(nmax, v);
        double bq = 0.0, bc = 0.0;
        for (int j = 0; j < grid.points(); ++j) {
            if (n[j] <= bulk_fraction * nmax) continue;
            bq = std::max(bq, std::abs(fq[j]));
            bc = std::max(bc, std::abs(f_classical[j]));
        }
        q_acc += bq;
        c_acc += bc;
    }
    return {q_acc / steps, c_acc / steps};
}

inline SqhaLegResult run_sqha_leg(const Propagator& prop, const ScalarField& pot,
                                  const NoiseParams& np, const QuantumParams& qp,
                                  WaveField psi, TracerEnsemble ens, int steps,
                                  std::uint64_t seed, std::uint64_t leg_tag,
                                  bool zero_quantum_force) {
    const Grid1D& grid = prop.grid();
    const ScalarField f_classical = classical_force_field(pot);
    const double dt = prop.dt();

    auto force_at = [&](const DensityField& n) {
        if (zero_quantum_force) return f_classical;
        ScalarField f = quantum_force(n, qp, 0.0, Scheme::Central);
        for (int j = 0; j < grid.points(); ++j) f.values()[j] += f_classical[j];
        return f;
    };

    SqhaLegResult out;
    out.series.reserve(steps + 1);
    out.series.push_back(ens);

    DensityField n_old = psi.density();
    ScalarField f_old = force_at(n_old);
    double jump_acc = 0.0;
    std::int64_t jump_count = 0;

    for (int i = 0; i < steps; ++i) {
        prop.step(psi);
        ScalarField f_mid = force_at(psi.density());
        if (np.theta != 0.0) {
            RngStream rng = RngStream::derive(seed, 0, i, leg_tag);
            const NoiseField y = sample_noise(grid, np, dt, rng);
            apply_density_kick(psi, y, dt);
        }
        const DensityField n_new = psi.density();
        const ScalarField f_new = force_at(n_new);

        // Noise-induced force jump at the tracers: the momentum-noise power
        // the density noise feeds them, used to calibrate classical kicks.
        for (int k = 0; k < ens.count(); ++k) {
            if (ens.flagged[k]) continue;
            const double df = f_new.interpolate(ens.q[k]) - f_mid.interpolate(ens.q[k]);
            jump_acc += df * df;
            ++jump_count;
        }

        advance_tracers(ens, f_old, f_new, dt, qp.mass);
        flag_tracers(ens, n_new);
        out.series.push_back(ens);
        f_old = f_new;
    }

    out.force_jump_sq_mean = jump_count > 0 ? jump_acc / jump_count : 0.0;
    return out;
}

}  // namespace detail

inline LimitReport compare_limit(const PotentialSpec& v, const QuantumParams& qp,
                                 const NoiseParams& np, const Grid1D& grid,
                                 const WaveField& psi0, double dt, int steps,
                                 std::uint64_t seed, LimitOptions opt = {},
                                 LimitTrajectories* trajectories = nullptr) {
    qp.validate();
    np.validate();
    if (steps <= 0)
        throw Error(ErrorCode::ConfigError, "classical_limit", "steps must be positive");

    LimitReport rep;
    rep.domain_length = grid.length();
    if (np.theta > 0.0) {
        rep.lambda_c = correlation_length(np);
        rep.lambda_c_ratio = rep.lambda_c / grid.length();
    }

    // System scale lambda_q from the relaxed stationary state. A divergent or
    // undefined range (free potential) leaves lambda_q flagged empty.
    if (v.confining()) {
        ClassifyOptions copt;
        if (std::isfinite(rep.lambda_c) && rep.lambda_c < 0.45 * grid.length())
            copt.lambda_c = rep.lambda_c;
        rep.range = classify_tail(v, qp, grid, copt);
        rep.range_computed = true;
        if (rep.range.converged) {
            rep.lambda_q = rep.range.lambda_q;
            rep.lambda_q_ratio = *rep.range.lambda_q / grid.length();
        }
    }

    const ScalarField pot = v.evaluate(grid, qp.mass);
    const Propagator prop(grid, pot, qp, dt);
    const TracerEnsemble ens0 = place_tracers(psi0, opt.tracer_count, opt.placement, qp);

    // Empirical kick calibration on a short independent pre-pass.
    double kick_rate = 0.0;
    if (np.theta > 0.0 && !opt.zero_quantum_force) {
        const int calib_steps = std::min(opt.calibration_steps, steps);
        const auto calib =
            detail::run_sqha_leg(prop, pot, np, qp, psi0, ens0, calib_steps, seed,
                                 detail::kCalibration, opt.zero_quantum_force);
        kick_rate = calib.force_jump_sq_mean * dt;
    }
    rep.kick_rate = kick_rate;

    const auto sqha = detail::run_sqha_leg(prop, pot, np, qp, psi0, ens0, steps, seed,
                                           detail::kSqhaLeg, opt.zero_quantum_force);
    const auto bulk = detail::bulk_force_stats(prop, pot, qp, psi0, steps, opt.bulk_fraction);
    rep.bulk_quantum_force = bulk.quantum;
    rep.bulk_classical_force = bulk.classical;

    const auto classical = classical_reference(v, grid, ens0, qp, kick_rate, dt, steps,
                                               detail::combine(seed, detail::kClassicalLeg));

    // Time-averaged RMS minimum-image distance over tracers that are still
    // unflagged at each step, normalized by the domain length.
    double d_acc = 0.0;
    int d_count = 0;
    for (std::size_t i = 1; i < sqha.series.size(); ++i) {
        double sum = 0.0;
        int m = 0;
        for (int k = 0; k < ens0.count(); ++k) {
            if (sqha.series[i].flagged[k]) continue;
            const double d = grid.wrap_distance(sqha.series[i].q[k], classical[i].q[k]);
            sum += d * d;
            ++m;
        }
        if (m > 0) {
            d_acc += std::sqrt(sum / m);
            ++d_count;
        }
    }
    if (d_count == 0)
        throw Error(ErrorCode::NonConvergence, "classical_limit",
                    "every tracer was flagged; no divergence statistic");
    rep.divergence = d_acc / d_count / grid.length();

    rep.classical_regime = rep.lambda_q_ratio.has_value() &&
                           *rep.lambda_q_ratio < opt.regime_threshold &&
                           rep.lambda_c_ratio < opt.regime_threshold;

    if (trajectories != nullptr) {
        trajectories->time.resize(sqha.series.size());
        for (std::size_t i = 0; i < sqha.series.size(); ++i)
            trajectories->time[i] = static_cast<double>(i) * dt;
        trajectories->sqha = sqha.series;
        trajectories->classical_ref = classical;
    }
    return rep;
}

}  // namespace sqha
