#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "sqha/error.hpp"
#include "sqha/spatial.hpp"

namespace sqha {

struct QuantumParams {
    double hbar = 1.0;
    double mass = 1.0;

    void validate() const {
        if (!(hbar > 0.0) || !(mass > 0.0))
            throw Error(ErrorCode::ConfigError, "qpotential", "hbar and mass must be positive");
    }
};

inline constexpr double kDensityFloorRel = 1e-12;

// Bohm quantum potential V_qu = -(hbar^2/2m) * laplacian(sqrt(n)) / sqrt(n).
//
// The density is regularized additively, n -> n + floor, before the square
// root (default floor: 1e-12 * max n). A hard clamp max(n, floor) would put a
// slope kink at the clamp boundary whose spectral Laplacian rings across the
// whole domain; the additive form stays smooth and agrees with the unfloored
// potential to O(floor/n) wherever the density is resolved.
inline ScalarField quantum_potential(const DensityField& n, const QuantumParams& p,
                                     double floor = 0.0, Scheme scheme = Scheme::Spectral) {
    p.validate();
    double nmax = 0.0;
    for (double v : n.values()) nmax = std::max(nmax, v);
    if (floor == 0.0) floor = kDensityFloorRel * nmax;
    if (!(floor > 0.0))
        throw Error(ErrorCode::ConfigError, "qpotential", "density floor must be positive");

    const int npts = n.grid().points();
    std::vector<double> amp(npts);
    for (int j = 0; j < npts; ++j) amp[j] = std::sqrt(n[j] + floor);
    ScalarField root(n.grid(), std::move(amp));
    ScalarField lap = derivative(root, 2, scheme);

    const double pref = -p.hbar * p.hbar / (2.0 * p.mass);
    std::vector<double> v(npts);
    for (int j = 0; j < npts; ++j) v[j] = pref * lap[j] / root[j];
    return ScalarField(n.grid(), std::move(v));
}

// Quantum force -grad V_qu(n).
inline ScalarField quantum_force(const DensityField& n, const QuantumParams& p,
                                 double floor = 0.0, Scheme scheme = Scheme::Spectral) {
    ScalarField grad = derivative(quantum_potential(n, p, floor, scheme), 1, scheme);
    for (double& v : grad.values()) v = -v;
    return grad;
}

// Quantum energy functional: integral of n * V_qu over the domain.
inline double quantum_energy(const DensityField& n, const QuantumParams& p) {
    ScalarField vqu = quantum_potential(n, p);
    double s = 0.0;
    for (int j = 0; j < n.grid().points(); ++j) s += n[j] * vqu[j];
    return s * n.grid().spacing();
}

// Range-of-interaction analysis of the quantum potential.
//
// lambda_q = 2 * Int_0^qmax |q^-1 dVqu/dq| dq / (lambda_c^-1 |dVqu/dq| at
// lambda_c). A linear quantum force makes the integrand constant, so the
// integral grows with the window and lambda_q is reported DIVERGENT; the
// diagnostic compares the [0, qmax/2] and [qmax/2, qmax] contributions.
struct RangeReport {
    std::optional<double> lambda_q;  // empty means DIVERGENT
    bool converged = false;
    double integral_value = 0.0;          // Int_0^qmax |q^-1 dVqu/dq| dq
    double denominator = 0.0;             // lambda_c^-1 |dVqu/dq|(lambda_c)
    double tail_ratio = 0.0;              // tail-interval integral / head-interval integral
    double tail_exponent_estimate = 0.0;  // log-log slope of the integrand
    double lambda_c = 0.0;
    double q_max = 0.0;

    bool divergent() const noexcept { return !lambda_q.has_value(); }
};

inline constexpr double kDivergenceRatioThreshold = 0.5;

// The derivative defaults to the central scheme: range inputs are often
// only piecewise-smooth (floored tails, cusped potentials), and a spectral
// derivative would spread any local feature's error across the whole
// integrand. The ratio test never needs spectral accuracy.
inline RangeReport interaction_range(const ScalarField& v_qu, double lambda_c, double q_max,
                                     double ratio_threshold = kDivergenceRatioThreshold,
                                     Scheme scheme = Scheme::Central) {
    const Grid1D& g = v_qu.grid();
    const double h = g.spacing();
    if (!(q_max > 0.0) || q_max > 0.5 * g.length())
        throw Error(ErrorCode::ConfigError, "qpotential",
                    "q_max must lie inside the positive half-domain");
    if (!(lambda_c > 0.0) || lambda_c > q_max)
        throw Error(ErrorCode::ConfigError, "qpotential", "lambda_c must lie in (0, q_max]");

    ScalarField slope = derivative(v_qu, 1, scheme);
    const double slope_at_lc = std::abs(slope.interpolate(lambda_c));
    if (slope_at_lc < 1e-14)
        throw Error(ErrorCode::DegenerateDenominator, "qpotential",
                    "|dVqu/dq| vanishes at lambda_c; range undefined");

    double head = 0.0, tail = 0.0;
    std::vector<double> log_q, log_g;
    for (int j = 0; j < g.points(); ++j) {
        const double q = g.node(j);
        if (q <= 0.0 || q > q_max) continue;
        const double integrand = std::abs(slope[j]) / q;
        (q <= 0.5 * q_max ? head : tail) += integrand * h;
        if (q >= 0.1 * q_max && q <= 0.9 * q_max && integrand > 0.0) {
            log_q.push_back(std::log(q));
            log_g.push_back(std::log(integrand));
        }
    }

    RangeReport r;
    r.lambda_c = lambda_c;
    r.q_max = q_max;
    r.integral_value = head + tail;
    r.denominator = slope_at_lc / lambda_c;
    r.tail_ratio = head > 0.0 ? tail / head : std::numeric_limits<double>::infinity();
    r.converged = r.tail_ratio <= ratio_threshold;
    if (r.converged) r.lambda_q = 2.0 * r.integral_value / r.denominator;

    // Least-squares slope of log(integrand) vs log(q) over the mid range.
    if (log_q.size() >= 4) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(log_q.size());
        for (std::size_t i = 0; i < log_q.size(); ++i) {
            sx += log_q[i];
            sy += log_g[i];
            sxx += log_q[i] * log_q[i];
            sxy += log_q[i] * log_g[i];
        }
        const double denom = m * sxx - sx * sx;
        if (denom > 0.0) r.tail_exponent_estimate = (m * sxy - sx * sy) / denom;
    }
    return r;
}

}  // namespace sqha
