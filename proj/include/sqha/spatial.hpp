#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "sqha/error.hpp"
#include "sqha/fft.hpp"

namespace sqha {

// Periodic 1-D grid, nodes q_j = -L/2 + j*h, j = 0..N-1. Spacing is derived
// from the stored (length, points) pair so h*N == length holds by
// construction. N must be even for spectral symmetry.
class Grid1D {
  public:
    Grid1D(double length, int points) : length_(length), points_(points) {
        if (!(length > 0.0) || !std::isfinite(length))
            throw Error(ErrorCode::ConfigError, "spatial", "grid length must be positive");
        if (points < 16 || points % 2 != 0)
            throw Error(ErrorCode::ConfigError, "spatial",
                        "grid needs at least 16 points and an even count, got " +
                            std::to_string(points));
    }

    double length() const noexcept { return length_; }
    int points() const noexcept { return points_; }
    double spacing() const noexcept { return length_ / points_; }
    double node(int j) const noexcept { return -0.5 * length_ + j * spacing(); }

    // Signed spectral index: 0,1,..,N/2-1,-N/2,..,-1.
    int signed_index(int j) const noexcept { return j < points_ / 2 ? j : j - points_; }
    double wavenumber(int j) const noexcept {
        return 2.0 * std::numbers::pi / length_ * signed_index(j);
    }

    // Minimum-image distance between two coordinates on the circle.
    double wrap_distance(double a, double b) const noexcept {
        double d = std::fmod(a - b, length_);
        if (d > 0.5 * length_) d -= length_;
        if (d < -0.5 * length_) d += length_;
        return d;
    }

    // Wrap a coordinate into [-L/2, L/2).
    double wrap(double q) const noexcept {
        const double half = 0.5 * length_;
        double w = std::fmod(q + half, length_);
        if (w < 0.0) w += length_;
        return w - half;
    }

    bool operator==(const Grid1D& o) const noexcept {
        return length_ == o.length_ && points_ == o.points_;
    }

  private:
    double length_;
    int points_;
};

class ScalarField {
  public:
    ScalarField(Grid1D grid, std::vector<double> values)
        : grid_(grid), values_(std::move(values)) {
        if (static_cast<int>(values_.size()) != grid_.points())
            throw Error(ErrorCode::InvalidField, "spatial", "value count does not match grid");
        for (double v : values_)
            if (!std::isfinite(v))
                throw Error(ErrorCode::InvalidField, "spatial", "non-finite value in field");
    }

    static ScalarField zeros(Grid1D grid) {
        return ScalarField(grid, std::vector<double>(grid.points(), 0.0));
    }

    template <typename F>
    static ScalarField sample(Grid1D grid, F&& f) {
        std::vector<double> v(grid.points());
        for (int j = 0; j < grid.points(); ++j) v[j] = f(grid.node(j));
        return ScalarField(grid, std::move(v));
    }

    const Grid1D& grid() const noexcept { return grid_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::vector<double>& values() noexcept { return values_; }
    double operator[](int j) const noexcept { return values_[j]; }

    // Linear interpolation at an arbitrary coordinate (periodic wrap).
    double interpolate(double q) const noexcept {
        const int n = grid_.points();
        const double h = grid_.spacing();
        double x = (grid_.wrap(q) + 0.5 * grid_.length()) / h;
        int j = static_cast<int>(std::floor(x));
        const double frac = x - j;
        j %= n;
        if (j < 0) j += n;
        const int j1 = (j + 1) % n;
        return values_[j] * (1.0 - frac) + values_[j1] * frac;
    }

  private:
    Grid1D grid_;
    std::vector<double> values_;
};

enum class Scheme { Spectral, Central };

// Periodic rectangle-rule quadrature h * sum(f). Exact for trigonometric
// polynomials below the Nyquist frequency.
inline double integrate(const ScalarField& f) {
    double s = 0.0;
    for (double v : f.values()) s += v;
    return s * f.grid().spacing();
}

inline double field_mean(const ScalarField& f) {
    return integrate(f) / f.grid().length();
}

inline double max_abs(const ScalarField& f) {
    double m = 0.0;
    for (double v : f.values()) m = std::max(m, std::abs(v));
    return m;
}

// d^order f / dq^order on the same grid.
// Spectral: exact for band-limited fields; the Nyquist mode of an odd-order
// derivative is zeroed (it has no consistent sign on a real grid).
// Central: 2nd-order finite differences with periodic wrap.
inline ScalarField derivative(const ScalarField& f, int order, Scheme scheme = Scheme::Spectral) {
    if (order != 1 && order != 2)
        throw Error(ErrorCode::ConfigError, "spatial", "derivative order must be 1 or 2");
    const Grid1D& g = f.grid();
    const int n = g.points();
    std::vector<double> out(n);

    if (scheme == Scheme::Central) {
        const double h = g.spacing();
        for (int j = 0; j < n; ++j) {
            const int jm = (j + n - 1) % n;
            const int jp = (j + 1) % n;
            out[j] = order == 1 ? (f[jp] - f[jm]) / (2.0 * h)
                                : (f[jp] - 2.0 * f[j] + f[jm]) / (h * h);
        }
        return ScalarField(g, std::move(out));
    }

    std::vector<std::complex<double>> spec(n);
    for (int j = 0; j < n; ++j) spec[j] = f[j];
    Fft::forward(spec);
    for (int j = 0; j < n; ++j) {
        const double k = g.wavenumber(j);
        if (order == 1) {
            spec[j] *= std::complex<double>(0.0, j == n / 2 ? 0.0 : k);
        } else {
            spec[j] *= -k * k;
        }
    }
    Fft::inverse(spec);
    for (int j = 0; j < n; ++j) out[j] = spec[j].real();
    return ScalarField(g, std::move(out));
}

// Nonnegative density normalized to unit mass.
class DensityField : public ScalarField {
  public:
    DensityField(Grid1D grid, std::vector<double> values)
        : ScalarField(grid, std::move(values)) {
        for (double v : this->values())
            if (v < 0.0)
                throw Error(ErrorCode::InvalidField, "spatial", "density has negative values");
        const double mass = integrate(*this);
        if (std::abs(mass - 1.0) > 1e-12)
            throw Error(ErrorCode::InvalidField, "spatial",
                        "density mass " + std::to_string(mass) + " not 1 within 1e-12");
    }

    // Rescale a nonnegative raw profile to unit mass.
    static DensityField normalized(Grid1D grid, std::vector<double> raw) {
        double s = 0.0;
        for (double v : raw) {
            if (v < 0.0)
                throw Error(ErrorCode::InvalidField, "spatial", "density has negative values");
            s += v;
        }
        s *= grid.spacing();
        if (!(s > 0.0))
            throw Error(ErrorCode::InvalidField, "spatial", "density has zero mass");
        for (double& v : raw) v /= s;
        return DensityField(grid, std::move(raw));
    }
};

// Complex amplitude with unit L2 norm.
class WaveField {
  public:
    WaveField(Grid1D grid, std::vector<std::complex<double>> values)
        : grid_(grid), values_(std::move(values)) {
        if (static_cast<int>(values_.size()) != grid_.points())
            throw Error(ErrorCode::InvalidField, "spatial", "value count does not match grid");
        for (const auto& z : values_)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                throw Error(ErrorCode::InvalidField, "spatial", "non-finite amplitude");
        const double n = norm();
        if (std::abs(n - 1.0) > 1e-12)
            throw Error(ErrorCode::InvalidField, "spatial",
                        "wavefunction norm " + std::to_string(n) + " not 1 within 1e-12");
    }

    static WaveField normalized(Grid1D grid, std::vector<std::complex<double>> raw) {
        double s = 0.0;
        for (const auto& z : raw) s += std::norm(z);
        s *= grid.spacing();
        if (!(s > 0.0))
            throw Error(ErrorCode::InvalidField, "spatial", "wavefunction has zero norm");
        const double inv = 1.0 / std::sqrt(s);
        for (auto& z : raw) z *= inv;
        return WaveField(grid, std::move(raw));
    }

    const Grid1D& grid() const noexcept { return grid_; }
    const std::vector<std::complex<double>>& values() const noexcept { return values_; }
    std::vector<std::complex<double>>& values() noexcept { return values_; }

    double norm() const noexcept {
        double s = 0.0;
        for (const auto& z : values_) s += std::norm(z);
        return s * grid_.spacing();
    }

    DensityField density() const {
        std::vector<double> n(values_.size());
        for (std::size_t j = 0; j < values_.size(); ++j) n[j] = std::norm(values_[j]);
        return DensityField::normalized(grid_, std::move(n));
    }

  private:
    Grid1D grid_;
    std::vector<std::complex<double>> values_;
};

inline double l2_distance(const ScalarField& a, const ScalarField& b) {
    if (!(a.grid() == b.grid()))
        throw Error(ErrorCode::InvalidField, "spatial", "fields on different grids");
    double s = 0.0;
    for (int j = 0; j < a.grid().points(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return std::sqrt(s * a.grid().spacing());
}

inline double l2_norm(const ScalarField& a) {
    double s = 0.0;
    for (double v : a.values()) s += v * v;
    return std::sqrt(s * a.grid().spacing());
}

// CSV emission, columns "q,value". %.17g keeps round-trips bit-exact.
inline void write_field_csv(std::ostream& os, const ScalarField& f,
                            const std::string& value_header = "value") {
    os << "q[length]," << value_header << "\n";
    char buf[64];
    for (int j = 0; j < f.grid().points(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", f.grid().node(j));
        os << buf << ",";
        std::snprintf(buf, sizeof(buf), "%.17g", f[j]);
        os << buf << "\n";
    }
}

}  // namespace sqha
