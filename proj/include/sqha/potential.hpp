#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sqha/error.hpp"
#include "sqha/spatial.hpp"

namespace sqha {

// External Hamiltonian potential V(q) as a tagged family.
//
// power_tail is V = A*|q|^kappa; the Lennard-Jones-like well is evaluated on
// the softened radius r = sqrt(q^2 + (0.9*sigma)^2) so it stays finite at the
// origin while keeping the 1/r^6 large-distance tail.
class PotentialSpec {
  public:
    enum class Family { Harmonic, PowerTail, LennardJonesLike, Free, Tabulated };

    static PotentialSpec harmonic(double omega) {
        PotentialSpec s(Family::Harmonic);
        s.require_positive(omega, "harmonic omega");
        s.omega_ = omega;
        return s;
    }

    static PotentialSpec power_tail(double amplitude, double kappa) {
        PotentialSpec s(Family::PowerTail);
        s.require_positive(amplitude, "power_tail amplitude");
        s.require_positive(kappa, "power_tail kappa");
        s.amplitude_ = amplitude;
        s.kappa_ = kappa;
        return s;
    }

    static PotentialSpec lennard_jones_like(double epsilon, double sigma) {
        PotentialSpec s(Family::LennardJonesLike);
        s.require_positive(epsilon, "lennard_jones epsilon");
        s.require_positive(sigma, "lennard_jones sigma");
        s.epsilon_ = epsilon;
        s.sigma_ = sigma;
        return s;
    }

    static PotentialSpec free() { return PotentialSpec(Family::Free); }

    static PotentialSpec tabulated(std::vector<double> values) {
        PotentialSpec s(Family::Tabulated);
        if (values.empty())
            throw Error(ErrorCode::ConfigError, "dynamics", "tabulated potential is empty");
        for (double v : values)
            if (!std::isfinite(v))
                throw Error(ErrorCode::ConfigError, "dynamics",
                            "tabulated potential has non-finite entry");
        s.table_ = std::move(values);
        return s;
    }

    Family family() const noexcept { return family_; }
    double omega() const noexcept { return omega_; }
    double amplitude() const noexcept { return amplitude_; }
    double kappa() const noexcept { return kappa_; }
    double epsilon() const noexcept { return epsilon_; }
    double sigma() const noexcept { return sigma_; }
    const std::vector<double>& table() const noexcept { return table_; }

    // Weaker-than-quadratic families and the LJ well confine via a bound
    // ground state; Free does not.
    bool confining() const noexcept { return family_ != Family::Free; }

    double evaluate_at(double q, double mass = 1.0) const {
        switch (family_) {
            case Family::Harmonic:
                return 0.5 * mass * omega_ * omega_ * q * q;
            case Family::PowerTail:
                return amplitude_ * std::pow(std::abs(q), kappa_);
            case Family::LennardJonesLike: {
                const double core = 0.9 * sigma_;
                const double r2 = q * q + core * core;
                const double s2 = sigma_ * sigma_ / r2;
                const double s6 = s2 * s2 * s2;
                return 4.0 * epsilon_ * (s6 * s6 - s6);
            }
            case Family::Free:
                return 0.0;
            case Family::Tabulated:
                throw Error(ErrorCode::ConfigError, "dynamics",
                            "tabulated potential has no off-grid values");
        }
        return 0.0;
    }

    ScalarField evaluate(const Grid1D& grid, double mass = 1.0) const {
        if (family_ == Family::Tabulated) {
            if (static_cast<int>(table_.size()) != grid.points())
                throw Error(ErrorCode::ConfigError, "dynamics",
                            "tabulated potential length does not match grid");
            return ScalarField(grid, table_);
        }
        return ScalarField::sample(grid, [&](double q) { return evaluate_at(q, mass); });
    }

    std::string describe() const {
        switch (family_) {
            case Family::Harmonic:
                return "harmonic(omega=" + std::to_string(omega_) + ")";
            case Family::PowerTail:
                return "power_tail(A=" + std::to_string(amplitude_) +
                       ",kappa=" + std::to_string(kappa_) + ")";
            case Family::LennardJonesLike:
                return "lennard_jones_like(eps=" + std::to_string(epsilon_) +
                       ",sigma=" + std::to_string(sigma_) + ")";
            case Family::Free:
                return "free";
            case Family::Tabulated:
                return "tabulated(" + std::to_string(table_.size()) + ")";
        }
        return "?";
    }

  private:
    explicit PotentialSpec(Family f) : family_(f) {}

    void require_positive(double v, const char* what) const {
        if (!(v > 0.0) || !std::isfinite(v))
            throw Error(ErrorCode::ConfigError, "dynamics",
                        std::string(what) + " must be positive and finite");
    }

    Family family_;
    double omega_ = 0.0;
    double amplitude_ = 0.0;
    double kappa_ = 0.0;
    double epsilon_ = 0.0;
    double sigma_ = 0.0;
    std::vector<double> table_;
};

}  // namespace sqha
