#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "sqha/dynamics.hpp"
#include "sqha/qpotential.hpp"
#include "sqha/rng.hpp"
#include "sqha/spatial.hpp"

namespace sqha {

// Bohmian test particles advected by the instantaneous total force field.
// Positions live on the periodic domain; a tracer that wanders into a region
// where the density sits on the regularization floor is flagged (the quantum
// force is unreliable there) and excluded from statistics.
struct TracerEnsemble {
    std::vector<double> q;
    std::vector<double> p;
    std::vector<std::uint8_t> flagged;

    int count() const noexcept { return static_cast<int>(q.size()); }

    static TracerEnsemble of_size(int m) {
        TracerEnsemble e;
        e.q.assign(m, 0.0);
        e.p.assign(m, 0.0);
        e.flagged.assign(m, 0);
        return e;
    }
};

enum class Placement { Quantile, Uniform };

// Bohmian momentum field m*v = hbar * Im(conj(psi) psi') / |psi|^2.
inline ScalarField bohm_momentum_field(const WaveField& psi, const QuantumParams& qp) {
    const Grid1D& g = psi.grid();
    const int n = g.points();
    std::vector<std::complex<double>> spec(psi.values());
    Fft::forward(spec);
    for (int j = 0; j < n; ++j) {
        const double k = g.wavenumber(j);
        spec[j] *= std::complex<double>(0.0, j == n / 2 ? 0.0 : k);
    }
    Fft::inverse(spec);

    double nmax = 0.0;
    for (const auto& z : psi.values()) nmax = std::max(nmax, std::norm(z));
    std::vector<double> p(n, 0.0);
    for (int j = 0; j < n; ++j) {
        const double dens = std::norm(psi.values()[j]);
        if (dens > kDensityFloorRel * nmax)
            p[j] = qp.hbar * std::imag(std::conj(psi.values()[j]) * spec[j]) / dens;
    }
    return ScalarField(g, std::move(p));
}

// Deterministic placement. Quantile puts tracer i at the (i+1/2)/M quantile
// of the density; Uniform spreads them evenly over the domain. Momenta come
// from the Bohmian momentum field of the initial state.
inline TracerEnsemble place_tracers(const WaveField& psi, int count, Placement placement,
                                    const QuantumParams& qp) {
    if (count <= 0)
        throw Error(ErrorCode::ConfigError, "dynamics", "tracer count must be positive");
    const Grid1D& g = psi.grid();
    TracerEnsemble ens = TracerEnsemble::of_size(count);

    if (placement == Placement::Uniform) {
        for (int i = 0; i < count; ++i)
            ens.q[i] = g.wrap(-0.5 * g.length() + (i + 0.5) * g.length() / count);
    } else {
        const auto n = psi.density();
        const double h = g.spacing();
        double cum = 0.0;
        int i = 0;
        for (int j = 0; j < g.points() && i < count; ++j) {
            const double next = cum + n[j] * h;
            while (i < count && (i + 0.5) / count <= next) {
                // Linear interpolation inside the cell.
                const double frac = ((i + 0.5) / count - cum) / std::max(next - cum, 1e-300);
                ens.q[i] = g.wrap(g.node(j) + frac * h);
                ++i;
            }
            cum = next;
        }
        for (; i < count; ++i) ens.q[i] = g.node(g.points() - 1);
    }

    const ScalarField pfield = bohm_momentum_field(psi, qp);
    for (int i = 0; i < count; ++i) ens.p[i] = pfield.interpolate(ens.q[i]);
    return ens;
}

// One velocity-Verlet step through the force frames at t and t+dt:
//   p += f_t(q) dt/2;  q += p dt/m;  p += f_{t+dt}(q') dt/2.
// Second-order and symplectic for a static field; with per-frame fields it
// degrades gracefully to the field sampling accuracy.
inline void advance_tracers(TracerEnsemble& ens, const ScalarField& f_old,
                            const ScalarField& f_new, double dt, double mass) {
    const Grid1D& g = f_old.grid();
    for (int i = 0; i < ens.count(); ++i) {
        if (ens.flagged[i]) continue;
        double p = ens.p[i] + 0.5 * dt * f_old.interpolate(ens.q[i]);
        double q = g.wrap(ens.q[i] + dt * p / mass);
        p += 0.5 * dt * f_new.interpolate(q);
        ens.q[i] = q;
        ens.p[i] = p;
    }
}

// Langevin-style momentum kicks, variance rate * dt per step, one derived
// stream per (seed, tracer, step).
inline void kick_tracers(TracerEnsemble& ens, double variance_rate, double dt,
                         std::uint64_t seed, std::int64_t step) {
    if (variance_rate <= 0.0) return;
    const double scale = std::sqrt(variance_rate * dt);
    for (int i = 0; i < ens.count(); ++i) {
        if (ens.flagged[i]) continue;
        RngStream rng = RngStream::derive(seed, static_cast<std::uint64_t>(i),
                                          static_cast<std::uint64_t>(step), 0x7261636bull);
        ens.p[i] += scale * rng.next_gaussian();
    }
}

// Sticky low-density flag.
inline void flag_tracers(TracerEnsemble& ens, const DensityField& n,
                         double floor_rel = kDensityFloorRel) {
    double nmax = 0.0;
    for (double v : n.values()) nmax = std::max(nmax, v);
    const double floor = floor_rel * nmax;
    for (int i = 0; i < ens.count(); ++i) {
        if (!ens.flagged[i] && n.interpolate(ens.q[i]) < floor) ens.flagged[i] = 1;
    }
}

inline ScalarField classical_force_field(const ScalarField& potential,
                                         Scheme scheme = Scheme::Central) {
    ScalarField f = derivative(potential, 1, scheme);
    for (double& v : f.values()) v = -v;
    return f;
}

// Total tracer force -grad(V + Vqu(n)), central scheme throughout so floor
// regions stay local.
inline ScalarField total_force_field(const ScalarField& potential, const DensityField& n,
                                     const QuantumParams& qp, bool include_quantum = true) {
    ScalarField f = classical_force_field(potential, Scheme::Central);
    if (include_quantum) {
        const ScalarField fq = quantum_force(n, qp, 0.0, Scheme::Central);
        for (int j = 0; j < f.grid().points(); ++j) f.values()[j] += fq[j];
    }
    return f;
}

// Offline tracer advection through a stored state series sampled at dt.
inline std::vector<TracerEnsemble> trace_trajectories(std::span<const SimState> states,
                                                      TracerEnsemble ensemble,
                                                      const QuantumParams& qp,
                                                      const PotentialSpec& v, double dt) {
    if (states.size() < 2)
        throw Error(ErrorCode::ConfigError, "dynamics", "need at least two state frames");
    const Grid1D& g = states.front().psi.grid();
    const ScalarField pot = v.evaluate(g, qp.mass);

    std::vector<TracerEnsemble> out;
    out.reserve(states.size());
    out.push_back(ensemble);

    DensityField n_old = states.front().psi.density();
    ScalarField f_old = total_force_field(pot, n_old, qp);
    for (std::size_t i = 1; i < states.size(); ++i) {
        const DensityField n_new = states[i].psi.density();
        const ScalarField f_new = total_force_field(pot, n_new, qp);
        advance_tracers(ensemble, f_old, f_new, dt, qp.mass);
        flag_tracers(ensemble, n_new);
        out.push_back(ensemble);
        f_old = f_new;
    }
    return out;
}

}  // namespace sqha
