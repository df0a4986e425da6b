#pragma once

#include <cmath>

#include "sqha/dynamics.hpp"
#include "sqha/potential.hpp"
#include "sqha/qpotential.hpp"

namespace sqha {

struct ClassifyOptions {
    double lambda_c = 0.0;   // 0: half the stationary density's std deviation
    double q_max = 0.0;      // 0: 0.45 * domain length
    double floor_rel = 1e-13;  // density floor relative to max(n)
    // Classification only needs the stationary density to ~1e-5, so the
    // relaxation runs with a coarser imaginary step than the full default.
    RelaxOptions relax{.dtau = 2e-3, .state_tol = 1e-10};
};

// Profile fields backing a RangeReport, for CSV emission.
struct RangeProfile {
    ScalarField v_qu;
    ScalarField force;
    ScalarField integrand;  // |q^-1 dVqu/dq|, zero at the origin column
};

// Tail classification of a potential family: relax to the stationary
// density (imaginary time, zero noise), build the quantum potential, and run
// the range-of-interaction diagnostic on it. A harmonic potential has a
// linear quantum force and reports DIVERGENT; sub-linear tails decay and
// report a finite lambda_q.
inline RangeReport classify_tail(const PotentialSpec& spec, const QuantumParams& qp,
                                 const Grid1D& grid, ClassifyOptions opt = {},
                                 RangeProfile* profile = nullptr) {
    if (!spec.confining())
        throw Error(ErrorCode::NotConfining, "qpotential",
                    "range analysis needs a confining potential, got " + spec.describe());

    const WaveField psi = relax_ground_state(spec, qp, grid, opt.relax);
    const DensityField n = psi.density();

    // Central Laplacian: it stays local where the density sits on the
    // regularization floor. The spectral one carries a small global error
    // from any cusp in the resolved region, and dividing by sqrt(floor)
    // amplifies it into an artificial wall right where the tail integrand
    // must decay.
    double nmax = 0.0;
    for (double v : n.values()) nmax = std::max(nmax, v);
    const ScalarField v_qu = quantum_potential(n, qp, opt.floor_rel * nmax, Scheme::Central);

    double lambda_c = opt.lambda_c;
    if (lambda_c <= 0.0) {
        const double var = mean_q2(psi) - mean_q(psi) * mean_q(psi);
        lambda_c = 0.5 * std::sqrt(std::max(var, 0.0));
    }
    const double q_max = opt.q_max > 0.0 ? opt.q_max : 0.45 * grid.length();

    if (profile != nullptr) {
        auto slope = derivative(v_qu, 1, Scheme::Central);
        std::vector<double> integrand(grid.points(), 0.0);
        std::vector<double> force(grid.points());
        for (int j = 0; j < grid.points(); ++j) {
            force[j] = -slope[j];
            const double q = grid.node(j);
            if (q != 0.0) integrand[j] = std::abs(slope[j] / q);
        }
        *profile = RangeProfile{v_qu, ScalarField(grid, std::move(force)),
                                ScalarField(grid, std::move(integrand))};
    }

    return interaction_range(v_qu, lambda_c, q_max);
}

}  // namespace sqha
