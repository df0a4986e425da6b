#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "sqha/error.hpp"
#include "sqha/noise.hpp"
#include "sqha/potential.hpp"
#include "sqha/qpotential.hpp"
#include "sqha/spatial.hpp"

namespace sqha {

struct SimState {
    WaveField psi;
    double time = 0.0;
    std::int64_t step = 0;
    double norm_drift = 0.0;  // |norm - 1| before the last renormalization
};

// Phase rotation per step stays bounded:
// dt <= 0.1 * min(2 m h^2 / (pi hbar), 1 / max|V|).
inline double stability_dt_bound(const Grid1D& grid, const QuantumParams& qp,
                                 const ScalarField& potential) {
    const double h = grid.spacing();
    const double kinetic = 2.0 * qp.mass * h * h / (std::numbers::pi * qp.hbar);
    const double vmax = max_abs(potential);
    const double pot = vmax > 0.0 ? 1.0 / vmax : std::numeric_limits<double>::infinity();
    return 0.1 * std::min(kinetic, pot);
}

// Strang split-step propagator: half potential phase, full kinetic step in
// spectral space, half potential phase. Unitary to round-off, 2nd order in dt.
// Phase tables are immutable after construction, so one instance can step
// many states from parallel workers.
class Propagator {
  public:
    Propagator(const Grid1D& grid, const ScalarField& potential, const QuantumParams& qp,
               double dt, bool enforce_bound = true)
        : grid_(grid), dt_(dt) {
        qp.validate();
        if (!(dt > 0.0))
            throw Error(ErrorCode::ConfigError, "dynamics", "dt must be positive");
        if (enforce_bound) {
            const double bound = stability_dt_bound(grid, qp, potential);
            if (dt > bound * (1.0 + 1e-12))
                throw Error(ErrorCode::ConfigError, "dynamics",
                            "dt = " + std::to_string(dt) + " exceeds stability bound " +
                                std::to_string(bound));
        }
        const int n = grid.points();
        half_potential_.resize(n);
        kinetic_.resize(n);
        for (int j = 0; j < n; ++j) {
            half_potential_[j] = std::polar(1.0, -0.5 * potential[j] * dt / qp.hbar);
            const double k = grid.wavenumber(j);
            kinetic_[j] = std::polar(1.0, -0.5 * qp.hbar * k * k * dt / qp.mass);
        }
    }

    double dt() const noexcept { return dt_; }
    const Grid1D& grid() const noexcept { return grid_; }

    // One unitary step; renormalizes and reports the pre-renormalization
    // drift |norm - 1|.
    double step(WaveField& psi) const {
        auto& v = psi.values();
        const int n = grid_.points();
        for (int j = 0; j < n; ++j) v[j] *= half_potential_[j];
        Fft::forward(v);
        for (int j = 0; j < n; ++j) v[j] *= kinetic_[j];
        Fft::inverse(v);
        for (int j = 0; j < n; ++j) v[j] *= half_potential_[j];

        const double norm = psi.norm();
        const double drift = std::abs(norm - 1.0);
        const double inv = 1.0 / std::sqrt(norm);
        for (auto& z : v) z *= inv;
        return drift;
    }

  private:
    Grid1D grid_;
    double dt_;
    std::vector<std::complex<double>> half_potential_;
    std::vector<std::complex<double>> kinetic_;
};

inline SimState step_deterministic(const SimState& state, const PotentialSpec& v,
                                   const QuantumParams& qp, double dt) {
    Propagator prop(state.psi.grid(), v.evaluate(state.psi.grid(), qp.mass), qp, dt);
    SimState out = state;
    out.norm_drift = prop.step(out.psi);
    out.time += dt;
    out.step += 1;
    return out;
}

// Density kick of the stochastic continuity equation: after the unitary
// half, n <- n + Y*dt clipped at zero and renormalized, with the pointwise
// phase of psi preserved. Clipping more than 1% of the total mass in one
// step means the (Theta, dt) pair left the near-deterministic validity
// regime.
inline constexpr double kMaxClipFraction = 0.01;

struct KickStats {
    double clipped_mass = 0.0;
};

inline KickStats apply_density_kick(WaveField& psi, const NoiseField& y, double dt) {
    auto& v = psi.values();
    const int n = psi.grid().points();
    std::vector<double> density(n);
    double clipped = 0.0;
    for (int j = 0; j < n; ++j) {
        const double nj = std::norm(v[j]) + y[j] * dt;
        if (nj < 0.0) {
            clipped -= nj;
            density[j] = 0.0;
        } else {
            density[j] = nj;
        }
    }
    clipped *= psi.grid().spacing();
    if (clipped > kMaxClipFraction)
        throw Error(ErrorCode::NoiseTooStrong, "dynamics",
                    "density kick clipped " + std::to_string(100.0 * clipped) +
                        "% of the mass in one step; reduce theta, mobility or dt");

    double mass = 0.0;
    for (double d : density) mass += d;
    mass *= psi.grid().spacing();
    const double inv = 1.0 / mass;
    // Rescale amplitudes in place: multiplying by sqrt(n_new/n_old) keeps
    // the pointwise phase without touching atan2. Nodes clipped to zero
    // restart with zero phase.
    for (int j = 0; j < n; ++j) {
        const double n_old = std::norm(v[j]);
        const double n_new = density[j] * inv;
        if (n_old > 0.0) {
            v[j] *= std::sqrt(n_new / n_old);
        } else {
            v[j] = std::sqrt(n_new);
        }
    }
    return {clipped};
}

// Stochastic step: deterministic Strang step, then the density kick with a
// field drawn from the per-(member, step) stream. Theta = 0 reproduces the
// deterministic path bit for bit.
inline SimState step_stochastic(const SimState& state, const PotentialSpec& v,
                                const QuantumParams& qp, const NoiseParams& np,
                                RngStream& rng, double dt) {
    SimState out = step_deterministic(state, v, qp, dt);
    if (np.theta == 0.0) return out;
    const NoiseField y = sample_noise(out.psi.grid(), np, dt, rng);
    apply_density_kick(out.psi, y, dt);
    return out;
}

// Driver-friendly form reusing a prebuilt propagator.
inline KickStats step_stochastic_inplace(SimState& state, const Propagator& prop,
                                         const NoiseParams& np, RngStream&& rng) {
    state.norm_drift = prop.step(state.psi);
    KickStats stats;
    if (np.theta != 0.0) {
        const NoiseField y = sample_noise(state.psi.grid(), np, prop.dt(), rng);
        stats = apply_density_kick(state.psi, y, prop.dt());
    }
    state.time += prop.dt();
    state.step += 1;
    return stats;
}

// Expectation values.
inline double mean_q(const WaveField& psi) {
    double s = 0.0;
    for (int j = 0; j < psi.grid().points(); ++j)
        s += psi.grid().node(j) * std::norm(psi.values()[j]);
    return s * psi.grid().spacing();
}

inline double mean_q2(const WaveField& psi) {
    double s = 0.0;
    for (int j = 0; j < psi.grid().points(); ++j) {
        const double q = psi.grid().node(j);
        s += q * q * std::norm(psi.values()[j]);
    }
    return s * psi.grid().spacing();
}

inline double mean_momentum(const WaveField& psi, const QuantumParams& qp) {
    std::vector<std::complex<double>> spec(psi.values());
    Fft::forward(spec);
    const int n = psi.grid().points();
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += qp.hbar * psi.grid().wavenumber(j) * std::norm(spec[j]);
    return s * psi.grid().spacing() / n;
}

// <H> = <T> + <V>, kinetic part in spectral space.
inline double total_energy(const WaveField& psi, const ScalarField& potential,
                           const QuantumParams& qp) {
    const int n = psi.grid().points();
    std::vector<std::complex<double>> spec(psi.values());
    Fft::forward(spec);
    double kinetic = 0.0;
    for (int j = 0; j < n; ++j) {
        const double k = psi.grid().wavenumber(j);
        kinetic += 0.5 * qp.hbar * qp.hbar * k * k / qp.mass * std::norm(spec[j]);
    }
    kinetic *= psi.grid().spacing() / n;
    double pot = 0.0;
    for (int j = 0; j < n; ++j) pot += potential[j] * std::norm(psi.values()[j]);
    pot *= psi.grid().spacing();
    return kinetic + pot;
}

// Normalized Gaussian packet with optional carrier momentum.
inline WaveField gaussian_packet(const Grid1D& grid, double center, double sigma,
                                 double momentum, const QuantumParams& qp) {
    if (!(sigma > 0.0))
        throw Error(ErrorCode::ConfigError, "dynamics", "packet sigma must be positive");
    const double k0 = momentum / qp.hbar;
    std::vector<std::complex<double>> v(grid.points());
    for (int j = 0; j < grid.points(); ++j) {
        const double q = grid.node(j);
        const double env = std::exp(-(q - center) * (q - center) / (4.0 * sigma * sigma));
        v[j] = std::polar(env, k0 * q);
    }
    return WaveField::normalized(grid, std::move(v));
}

struct RelaxOptions {
    double dtau = 0.0;          // 0: use the real-time stability bound
    double energy_tol = 1e-12;  // per-step energy change
    // Energy error is quadratic in the state error, so the energy criterion
    // alone can stop with the state still ~1e-5 away. The final stage also
    // requires the per-step L2 state change to fall below this.
    double state_tol = 1e-13;
    std::int64_t max_iters = 2'000'000;
};

// Ground state by imaginary-time split stepping with per-step
// renormalization. The imaginary step is annealed from a coarse value down
// to the accuracy-limited one; the final stage iterates until the per-step
// energy change falls below energy_tol.
inline WaveField relax_ground_state(const PotentialSpec& v, const QuantumParams& qp,
                                    const Grid1D& grid, RelaxOptions opt = {}) {
    qp.validate();
    if (!v.confining())
        throw Error(ErrorCode::NotConfining, "dynamics",
                    "potential " + v.describe() + " has no normalizable stationary density");

    const ScalarField pot = v.evaluate(grid, qp.mass);
    const double dtau_end = opt.dtau > 0.0 ? opt.dtau : stability_dt_bound(grid, qp, pot);
    std::vector<double> stages;
    for (double d = std::max(dtau_end, 0.2); d > dtau_end * 1.0001; d /= 10.0)
        stages.push_back(d);
    stages.push_back(dtau_end);

    const int n = grid.points();

    // Initial guess. For a reflection-symmetric potential start from an even
    // state: an off-center start carries an odd component that only decays
    // at the (possibly exponentially small) tunneling splitting rate.
    bool even = true;
    double vscale = std::max(max_abs(pot), 1.0);
    for (int j = 1; j < n && even; ++j)
        even = std::abs(pot[j] - pot[n - j]) <= 1e-12 * vscale;
    int j0 = n / 2;
    if (!even) {
        for (int j = 0; j < n; ++j)
            if (pot[j] < pot[j0]) j0 = j;
    }
    WaveField psi = gaussian_packet(grid, grid.node(j0), grid.length() / 8.0, 0.0, qp);

    std::vector<std::complex<double>> half_pot(n), kinetic(n);
    std::int64_t iterations = 0;
    double last_change = std::numeric_limits<double>::infinity();
    for (std::size_t stage = 0; stage < stages.size(); ++stage) {
        const double dtau = stages[stage];
        const bool final_stage = stage + 1 == stages.size();
        const double tol = final_stage ? opt.energy_tol : 1e-10;
        for (int j = 0; j < n; ++j) {
            half_pot[j] = std::exp(-0.5 * pot[j] * dtau / qp.hbar);
            const double k = grid.wavenumber(j);
            kinetic[j] = std::exp(-0.5 * qp.hbar * k * k * dtau / qp.mass);
        }

        double e_prev = total_energy(psi, pot, qp);
        std::vector<std::complex<double>> prev;
        bool stage_done = false;
        while (!stage_done && iterations < opt.max_iters) {
            ++iterations;
            auto& w = psi.values();
            if (final_stage) prev = w;
            for (int j = 0; j < n; ++j) w[j] *= half_pot[j];
            Fft::forward(w);
            for (int j = 0; j < n; ++j) w[j] *= kinetic[j];
            Fft::inverse(w);
            for (int j = 0; j < n; ++j) w[j] *= half_pot[j];
            double norm = 0.0;
            for (const auto& z : w) norm += std::norm(z);
            norm *= grid.spacing();
            const double inv = 1.0 / std::sqrt(norm);
            for (auto& z : w) z *= inv;

            const double e = total_energy(psi, pot, qp);
            last_change = std::abs(e - e_prev);
            e_prev = e;
            stage_done = last_change < tol;
            if (stage_done && final_stage) {
                double move = 0.0;
                for (int j = 0; j < n; ++j) move += std::norm(w[j] - prev[j]);
                stage_done = std::sqrt(move * grid.spacing()) < opt.state_tol;
            }
        }
        if (!stage_done)
            throw Error(ErrorCode::NonConvergence, "dynamics",
                        "ground-state relaxation hit the iteration cap; last per-step "
                        "energy change " + std::to_string(last_change));
    }

    // Confinement check: a stationary density must have decayed at the wrap
    // point, otherwise the periodic surrogate domain is invalid.
    const auto n_rel = psi.density();
    double nmax = 0.0;
    for (double d : n_rel.values()) nmax = std::max(nmax, d);
    if (n_rel[0] > 1e-8 * nmax)
        throw Error(ErrorCode::NotConfining, "dynamics",
                    "relaxed density does not decay at the domain edge; " + v.describe() +
                        " is not confining on this domain");
    return psi;
}

}  // namespace sqha
