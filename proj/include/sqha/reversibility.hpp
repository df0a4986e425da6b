#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "sqha/dynamics.hpp"
#include "sqha/parallel.hpp"

namespace sqha {

// Forward-backward asymmetry experiment: evolve stochastically for a
// horizon T, reverse (conjugate), evolve another T with fresh noise, reverse
// again, and measure how far the final density lies from the initial one.
// With zero noise the round trip is the exact inverse and the asymmetry is
// integrator round-off; with noise it grows because the noise is not
// reversed along with the state.

inline SimState time_reverse(const SimState& state) {
    SimState out = state;
    for (auto& z : out.psi.values()) z = std::conj(z);
    return out;
}

struct AsymmetryResult {
    double theta = 0.0;
    double horizon = 0.0;
    int trials = 0;
    double mean_asymmetry = 0.0;
    double stderr_asymmetry = 0.0;
    double mean_fidelity_deficit = 0.0;  // 1 - |<psi0|psi_roundtrip>|
    std::vector<double> per_trial;
    std::string error;  // non-empty when a scan entry failed

    bool failed() const noexcept { return !error.empty(); }
};

struct ReversalOptions {
    int jobs = 1;
    // Replay the forward leg's noise fields in reverse order on the backward
    // leg instead of drawing fresh ones (conjugated-noise comparison mode).
    bool replay_noise = false;
    int min_trials = 30;
};

namespace detail {

inline constexpr std::uint64_t kForwardLeg = 1;
inline constexpr std::uint64_t kBackwardLeg = 2;

struct TrialOutcome {
    double asymmetry;
    double fidelity_deficit;
};

inline TrialOutcome run_reversal_trial(const WaveField& psi0, const Propagator& prop,
                                       const NoiseParams& np, int steps, std::uint64_t seed,
                                       int trial, bool replay_noise) {
    SimState s{psi0, 0.0, 0};
    for (int i = 0; i < steps; ++i)
        step_stochastic_inplace(s, prop, np,
                                RngStream::derive(seed, trial, i, kForwardLeg));
    s = time_reverse(s);
    for (int i = 0; i < steps; ++i) {
        const std::uint64_t leg = replay_noise ? kForwardLeg : kBackwardLeg;
        const std::uint64_t idx = replay_noise ? steps - 1 - i : i;
        step_stochastic_inplace(s, prop, np, RngStream::derive(seed, trial, idx, leg));
    }
    s = time_reverse(s);

    const auto n0 = psi0.density();
    const auto n1 = s.psi.density();
    const double a = l2_distance(n1, n0) / l2_norm(n0);

    std::complex<double> overlap = 0.0;
    for (int j = 0; j < psi0.grid().points(); ++j)
        overlap += std::conj(psi0.values()[j]) * s.psi.values()[j];
    overlap *= psi0.grid().spacing();
    return {a, 1.0 - std::abs(overlap)};
}

}  // namespace detail

inline AsymmetryResult reversal_asymmetry(const WaveField& psi0, const PotentialSpec& v,
                                          const QuantumParams& qp, NoiseParams np, double theta,
                                          double dt, double horizon, int trials,
                                          std::uint64_t seed, ReversalOptions opt = {}) {
    if (trials < opt.min_trials)
        throw Error(ErrorCode::ConfigError, "reversibility",
                    "need at least " + std::to_string(opt.min_trials) + " trials");
    if (!(horizon > 0.0))
        throw Error(ErrorCode::ConfigError, "reversibility", "horizon must be positive");
    np.theta = theta;
    np.validate();

    const Grid1D& grid = psi0.grid();
    const Propagator prop(grid, v.evaluate(grid, qp.mass), qp, dt);
    const int steps = std::max(1, static_cast<int>(std::llround(horizon / dt)));

    AsymmetryResult res;
    res.theta = theta;
    res.horizon = steps * dt;
    res.trials = trials;
    res.per_trial.assign(trials, 0.0);
    std::vector<double> fidelity(trials, 0.0);

    if (theta == 0.0) {
        // Deterministic: every trial is identical.
        const auto out = detail::run_reversal_trial(psi0, prop, np, steps, seed, 0, false);
        for (int k = 0; k < trials; ++k) res.per_trial[k] = out.asymmetry;
        res.mean_asymmetry = out.asymmetry;
        res.mean_fidelity_deficit = out.fidelity_deficit;
        return res;
    }

    parallel_for(trials, opt.jobs, [&](int k) {
        const auto out =
            detail::run_reversal_trial(psi0, prop, np, steps, seed, k, opt.replay_noise);
        res.per_trial[k] = out.asymmetry;
        fidelity[k] = out.fidelity_deficit;
    });

    double mean = 0.0, fmean = 0.0;
    for (int k = 0; k < trials; ++k) {
        mean += res.per_trial[k];
        fmean += fidelity[k];
    }
    mean /= trials;
    fmean /= trials;
    double var = 0.0;
    for (int k = 0; k < trials; ++k) {
        const double d = res.per_trial[k] - mean;
        var += d * d;
    }
    res.mean_asymmetry = mean;
    res.stderr_asymmetry = trials > 1 ? std::sqrt(var / (trials - 1.0) / trials) : 0.0;
    res.mean_fidelity_deficit = fmean;
    return res;
}

// Batch driver over an ascending theta grid (baseline theta = 0 first).
// Per-theta failures are recorded in the result row and the scan continues.
inline std::vector<AsymmetryResult> asymmetry_scan(const WaveField& psi0,
                                                   const PotentialSpec& v,
                                                   const QuantumParams& qp,
                                                   const NoiseParams& np_base,
                                                   const std::vector<double>& theta_grid,
                                                   double dt, double horizon, int trials,
                                                   std::uint64_t seed,
                                                   ReversalOptions opt = {}) {
    if (theta_grid.empty() || theta_grid.front() != 0.0)
        throw Error(ErrorCode::ConfigError, "reversibility",
                    "theta grid must start with the theta = 0 baseline");
    for (std::size_t i = 1; i < theta_grid.size(); ++i)
        if (!(theta_grid[i] > theta_grid[i - 1]))
            throw Error(ErrorCode::ConfigError, "reversibility",
                        "theta grid must be strictly ascending");

    std::vector<AsymmetryResult> out;
    out.reserve(theta_grid.size());
    for (std::size_t i = 0; i < theta_grid.size(); ++i) {
        const std::uint64_t theta_seed = detail::combine(seed, 0x7363616eull + i);
        try {
            out.push_back(reversal_asymmetry(psi0, v, qp, np_base, theta_grid[i], dt, horizon,
                                             trials, theta_seed, opt));
        } catch (const Error& e) {
            AsymmetryResult failed;
            failed.theta = theta_grid[i];
            failed.horizon = horizon;
            failed.trials = trials;
            failed.error = e.what();
            out.push_back(std::move(failed));
        }
    }
    return out;
}

}  // namespace sqha
