// Bohmian tracer advection.
//
// Oracles:
//   stationary ground state: total force -grad(V + Vqu) vanishes identically,
//     a center tracer must not move.
//   free Gaussian (sigma = 1): quantum force q/(4 sigma^4) pushes a tracer at
//     q = sigma outward.
//   harmonic coherent state: the packet center rides the classical ellipse
//     q_c(t) = A cos(omega t); a tracer started at the center with the
//     center's momentum stays on it.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>

#include "sqha/tracers.hpp"

using namespace sqha;
using std::numbers::pi;

TEST_CASE("center tracer of the harmonic ground state stays put", "[tracers]") {
    Grid1D g(16.0, 256);
    QuantumParams qp;
    auto V = PotentialSpec::harmonic(1.0);
    // Analytic ground state, held fixed: build a short constant state series.
    auto psi = WaveField::normalized(g, [&] {
        std::vector<std::complex<double>> v(g.points());
        for (int j = 0; j < g.points(); ++j) v[j] = std::exp(-0.5 * g.node(j) * g.node(j));
        return v;
    }());

    std::vector<SimState> frames(400, SimState{psi, 0.0, 0});
    TracerEnsemble ens = TracerEnsemble::of_size(1);
    ens.q[0] = 0.0;
    ens.p[0] = 0.0;
    auto series = trace_trajectories(frames, ens, qp, V, 1e-3);
    CHECK(std::abs(series.back().q[0]) < 1e-8);
    CHECK(std::abs(series.back().p[0]) < 1e-8);
}

TEST_CASE("free-packet tracer at one sigma accelerates outward", "[tracers]") {
    Grid1D g(40.0, 512);
    QuantumParams qp;
    auto V = PotentialSpec::free();
    const double dt = stability_dt_bound(g, qp, V.evaluate(g));
    Propagator prop(g, V.evaluate(g), qp, dt);

    std::vector<SimState> frames;
    SimState s{gaussian_packet(g, 0.0, 1.0, 0.0, qp), 0.0, 0};
    frames.push_back(s);
    for (int i = 0; i < 200; ++i) {
        prop.step(s.psi);
        frames.push_back(s);
    }

    TracerEnsemble ens = TracerEnsemble::of_size(1);
    ens.q[0] = 1.0;  // one sigma: quantum force = 1/(4 sigma^4) * q = 0.25
    ens.p[0] = 0.0;
    auto series = trace_trajectories(frames, ens, qp, V, dt);
    CHECK(series.back().p[0] > 0.0);
    CHECK(series.back().q[0] > 1.0);
}

TEST_CASE("coherent-state tracer follows the classical trajectory", "[tracers]") {
    Grid1D g(16.0, 256);
    QuantumParams qp;
    const double amplitude = 2.0;
    auto V = PotentialSpec::harmonic(1.0);
    const ScalarField pot = V.evaluate(g);
    const double dt = stability_dt_bound(g, qp, pot);
    Propagator prop(g, pot, qp, dt);

    // Coherent state: ground-state width, displaced by A.
    const double sigma = std::sqrt(0.5);
    SimState s{gaussian_packet(g, amplitude, sigma, 0.0, qp), 0.0, 0};

    TracerEnsemble ens = TracerEnsemble::of_size(1);
    ens.q[0] = amplitude;
    ens.p[0] = 0.0;

    DensityField n_old = s.psi.density();
    ScalarField f_old = total_force_field(pot, n_old, qp);
    const int steps = static_cast<int>(std::llround(2.0 * pi / dt));
    double worst = 0.0;
    for (int i = 1; i <= steps; ++i) {
        prop.step(s.psi);
        const DensityField n_new = s.psi.density();
        const ScalarField f_new = total_force_field(pot, n_new, qp);
        advance_tracers(ens, f_old, f_new, dt, qp.mass);
        f_old = f_new;
        const double want = amplitude * std::cos(i * dt);
        worst = std::max(worst, std::abs(ens.q[0] - want));
    }
    CHECK(worst < 1e-3 * amplitude);
}

TEST_CASE("quantile placement tracks the density and carrier momentum", "[tracers]") {
    Grid1D g(32.0, 512);
    QuantumParams qp;
    const double k0 = 2.0 * pi / g.length() * 12.0;
    auto psi = gaussian_packet(g, 1.0, 1.5, k0 * qp.hbar, qp);

    auto ens = place_tracers(psi, 16, Placement::Quantile, qp);
    // Median tracers near the packet center, all within a few sigma.
    for (int i = 0; i < ens.count(); ++i) CHECK(std::abs(ens.q[i] - 1.0) < 6.0);
    CHECK(std::abs(ens.q[7] - 1.0) < 0.5);
    for (int i = 1; i < ens.count(); ++i) CHECK(ens.q[i] > ens.q[i - 1]);  // sorted

    // Bohmian momentum of a carrier packet is hbar k0 everywhere.
    for (int i = 0; i < ens.count(); ++i)
        CHECK(ens.p[i] == Catch::Approx(k0 * qp.hbar).margin(1e-6));
}

TEST_CASE("uniform placement spans the domain", "[tracers]") {
    Grid1D g(32.0, 256);
    QuantumParams qp;
    auto psi = gaussian_packet(g, 0.0, 2.0, 0.0, qp);
    auto ens = place_tracers(psi, 8, Placement::Uniform, qp);
    CHECK(ens.q.front() == Catch::Approx(-14.0));
    CHECK(ens.q.back() == Catch::Approx(14.0));
}

TEST_CASE("tracers in floor-density regions are flagged and frozen", "[tracers]") {
    Grid1D g(40.0, 512);
    QuantumParams qp;
    auto psi = gaussian_packet(g, 0.0, 1.0, 0.0, qp);
    const auto n = psi.density();

    TracerEnsemble ens = TracerEnsemble::of_size(2);
    ens.q[0] = 0.5;    // bulk
    ens.q[1] = 18.0;   // density ~ e^-162, far below the floor
    flag_tracers(ens, n);
    CHECK(ens.flagged[0] == 0);
    CHECK(ens.flagged[1] == 1);

    // Flagged tracers do not move.
    auto f = total_force_field(PotentialSpec::free().evaluate(g), n, qp);
    const double q1 = ens.q[1];
    advance_tracers(ens, f, f, 1e-2, qp.mass);
    CHECK(ens.q[1] == q1);
}

TEST_CASE("momentum kicks are deterministic per seed and diffuse correctly", "[tracers]") {
    TracerEnsemble a = TracerEnsemble::of_size(64);
    TracerEnsemble b = TracerEnsemble::of_size(64);
    const double rate = 0.3, dt = 1e-2;
    for (int step = 0; step < 100; ++step) {
        kick_tracers(a, rate, dt, 11, step);
        kick_tracers(b, rate, dt, 11, step);
    }
    for (int i = 0; i < 64; ++i) REQUIRE(a.p[i] == b.p[i]);

    // Fresh seed, many tracers: <p^2> after T = steps*dt is rate*T.
    TracerEnsemble c = TracerEnsemble::of_size(4096);
    for (int step = 0; step < 100; ++step) kick_tracers(c, rate, dt, 12345, step);
    double var = 0.0;
    for (double p : c.p) var += p * p;
    var /= c.count();
    CHECK(var == Catch::Approx(rate * 1.0).epsilon(0.1));
}
