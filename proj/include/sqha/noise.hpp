#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "sqha/error.hpp"
#include "sqha/fft.hpp"
#include "sqha/rng.hpp"
#include "sqha/spatial.hpp"

namespace sqha {

// Spatially correlated, time-white density noise.
//
// Target spatial covariance of the rate field Y:
//   Cov[Y(q) Y(q+delta)] = C(delta) / dt,
//   C(delta) = k*Theta*mobility / (2 lambda_c^2) * exp(-(delta/lambda_c)^2),
// so the Euler-Maruyama density increment Y*dt has covariance C(delta)*dt and
// the time-integrated covariance is dt-independent.
//
// Every sample is projected to zero spatial mean, which is what lets the
// density update conserve total probability.
struct NoiseParams {
    double theta = 0.0;     // noise amplitude, temperature units
    double boltzmann = 1.0; // k
    double mobility = 1.0;  // mu-tilde, dimensionless scale of the variance
    double f = 1.0;         // order-unity constant in the correlation length
    double mass = 1.0;
    double hbar = 1.0;

    void validate() const {
        if (theta < 0.0 || !std::isfinite(theta))
            throw Error(ErrorCode::ConfigError, "noise", "theta must be >= 0");
        if (!(boltzmann > 0.0) || !(mobility > 0.0) || !(f > 0.0) || !(mass > 0.0) ||
            !(hbar > 0.0))
            throw Error(ErrorCode::ConfigError, "noise",
                        "k, mobility, f, mass, hbar must be positive");
    }

    // Covariance at zero lag for the unit-dt field.
    double variance_prefactor(double lambda_c) const {
        return boltzmann * theta * mobility / (2.0 * lambda_c * lambda_c);
    }
};

// lambda_c = f * hbar / sqrt(2 m k Theta). Diverges at Theta = 0.
inline double correlation_length(const NoiseParams& p) {
    p.validate();
    if (p.theta == 0.0)
        throw Error(ErrorCode::InfiniteCorrelation, "noise",
                    "correlation length diverges in the deterministic limit theta = 0");
    return p.f * p.hbar / std::sqrt(2.0 * p.mass * p.boltzmann * p.theta);
}

class NoiseField : public ScalarField {
  public:
    NoiseField(ScalarField field, double lambda_c, std::uint64_t stream_tag)
        : ScalarField(std::move(field)), lambda_c_(lambda_c), stream_tag_(stream_tag) {}

    double lambda_c() const noexcept { return lambda_c_; }
    std::uint64_t stream_tag() const noexcept { return stream_tag_; }

  private:
    double lambda_c_;
    std::uint64_t stream_tag_;
};

// One spatial realization of the correlated noise, via spectral synthesis:
// white Gaussian noise is filtered by the square root of the kernel's
// circulant eigenvalues. The eigenvalues are sampled from the continuous
// Fourier transform of the Gaussian kernel,
//   S(k) = C0 * sqrt(pi) * lambda_c * exp(-(k lambda_c)^2 / 4),
// which by Poisson summation equals the exact periodized-kernel eigenvalues
// up to aliasing terms exp(-(pi lambda_c/h)^2) — below round-off once
// lambda_c >= 2h, the same bound the resolvability check enforces.
inline NoiseField sample_noise(const Grid1D& grid, const NoiseParams& p, double dt,
                               RngStream& rng, std::uint64_t stream_tag = 0) {
    p.validate();
    if (!(dt > 0.0))
        throw Error(ErrorCode::ConfigError, "noise", "dt must be positive");
    if (p.theta == 0.0)
        return NoiseField(ScalarField::zeros(grid), std::numeric_limits<double>::infinity(),
                          stream_tag);

    const double lambda_c = correlation_length(p);
    const double h = grid.spacing();
    if (lambda_c < 2.0 * h)
        throw Error(ErrorCode::UnresolvedCorrelation, "noise",
                    "lambda_c = " + std::to_string(lambda_c) + " below 2h = " +
                        std::to_string(2.0 * h) + "; refine the grid");

    const int n = grid.points();
    const double c0 = p.variance_prefactor(lambda_c) / dt;
    const double spectral_scale = c0 * std::sqrt(std::numbers::pi) * lambda_c / h;

    // The sqrt-eigenvalue filter only depends on (grid, lambda_c, scale);
    // steppers call this every step, so keep the last filter per thread.
    struct FilterCache {
        int n = 0;
        double length = 0.0, lambda_c = 0.0, scale = 0.0;
        std::vector<double> filter;
    };
    static thread_local FilterCache cache;
    if (cache.n != n || cache.length != grid.length() || cache.lambda_c != lambda_c ||
        cache.scale != spectral_scale) {
        cache.n = n;
        cache.length = grid.length();
        cache.lambda_c = lambda_c;
        cache.scale = spectral_scale;
        cache.filter.resize(n);
        for (int j = 0; j < n; ++j) {
            const double k = grid.wavenumber(j);
            cache.filter[j] =
                std::sqrt(spectral_scale * std::exp(-0.25 * k * k * lambda_c * lambda_c));
        }
    }

    std::vector<std::complex<double>> work(n);
    for (int j = 0; j < n; ++j) work[j] = rng.next_gaussian();
    Fft::forward(work);
    for (int j = 0; j < n; ++j) work[j] *= cache.filter[j];
    Fft::inverse(work);

    std::vector<double> y(n);
    double mean = 0.0;
    for (int j = 0; j < n; ++j) {
        y[j] = work[j].real();
        mean += y[j];
    }
    mean /= n;
    for (double& v : y) v -= mean;

    return NoiseField(ScalarField(grid, std::move(y)), lambda_c, stream_tag);
}

// Empirical covariance of a sample set vs lag, with the theoretical kernel.
//
// `empirical` is corrected for the zero-mean projection: projecting out the
// spatial mean lowers every lag of the raw circular autocovariance by
// S(0)/N (the k=0 eigenvalue), exactly like the familiar mean-subtraction
// bias of covariance estimators, and the correction adds that constant back
// so the estimate targets the unprojected kernel.
struct CovarianceReport {
    std::vector<double> lag;
    std::vector<double> empirical;  // projection-corrected
    std::vector<double> raw;        // uncorrected
    std::vector<double> theoretical;
    double fitted_lambda_c = 0.0;
    double nominal_lambda_c = 0.0;
    double c0_empirical = 0.0;
    double c0_theoretical = 0.0;
    double c0_stderr = 0.0;
    double max_abs_deviation = 0.0;  // vs theoretical, relative to C(0)
};

// expected_c0: theoretical C(0). Pass 0 to infer the amplitude from the
// samples themselves (the report then measures shape agreement only).
inline CovarianceReport validate_noise(std::span<const NoiseField> samples,
                                       double expected_c0 = 0.0) {
    if (samples.size() < 1000)
        throw Error(ErrorCode::ConfigError, "noise",
                    "need at least 1000 samples, got " + std::to_string(samples.size()));
    const Grid1D& g = samples.front().grid();
    for (const auto& s : samples)
        if (!(s.grid() == g))
            throw Error(ErrorCode::ConfigError, "noise", "samples on mixed grids");

    const int n = g.points();
    const int lags = n / 2 + 1;
    const double m = static_cast<double>(samples.size());

    // Circular autocovariance averaged over samples, done spectrally:
    // c = IFFT(|FFT(y)|^2) / N per sample.
    std::vector<double> acc(n, 0.0);
    std::vector<double> c0_per_sample;
    c0_per_sample.reserve(samples.size());
    std::vector<std::complex<double>> work(n);
    for (const auto& s : samples) {
        for (int j = 0; j < n; ++j) work[j] = s[j];
        Fft::forward(work);
        for (auto& z : work) z = std::norm(z);
        Fft::inverse(work);
        for (int j = 0; j < n; ++j) acc[j] += work[j].real() / n;
        c0_per_sample.push_back(work[0].real() / n);
    }
    for (double& v : acc) v /= m;

    const double lambda_c = samples.front().lambda_c();
    CovarianceReport rep;
    rep.nominal_lambda_c = lambda_c;

    // Projection bias: removing the spatial mean lowers every lag by the k=0
    // circulant eigenvalue over N, i.e. by C0 * sqrt(pi) * lambda_c / L.
    double bias = 0.0;
    double theory_c0 = 0.0;
    if (std::isfinite(lambda_c)) {
        const double r = std::sqrt(std::numbers::pi) * lambda_c / g.length();
        theory_c0 = expected_c0 > 0.0 ? expected_c0 : acc[0] / (1.0 - r);
        bias = theory_c0 * r;
    }

    rep.lag.resize(lags);
    rep.raw.resize(lags);
    rep.empirical.resize(lags);
    rep.theoretical.resize(lags);
    for (int l = 0; l < lags; ++l) {
        rep.lag[l] = l * g.spacing();
        rep.raw[l] = acc[l];
        rep.empirical[l] = acc[l] + bias;
        rep.theoretical[l] =
            std::isfinite(lambda_c)
                ? theory_c0 * std::exp(-(rep.lag[l] / lambda_c) * (rep.lag[l] / lambda_c))
                : 0.0;
    }
    rep.c0_empirical = rep.empirical[0];
    rep.c0_theoretical = theory_c0;

    double var = 0.0;
    for (double c : c0_per_sample) {
        const double d = c - rep.raw[0];
        var += d * d;
    }
    rep.c0_stderr = std::sqrt(var / (m * std::max(1.0, m - 1.0)));

    if (rep.c0_empirical > 0.0 && std::isfinite(lambda_c)) {
        // Fit ln C vs delta^2 over lags with C above 5% of C(0).
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int cnt = 0;
        for (int l = 1; l < lags; ++l) {
            if (rep.empirical[l] < 0.05 * rep.c0_empirical) break;
            const double x = rep.lag[l] * rep.lag[l];
            const double y = std::log(rep.empirical[l] / rep.c0_empirical);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++cnt;
        }
        if (cnt >= 3) {
            const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
            if (slope < 0.0) rep.fitted_lambda_c = 1.0 / std::sqrt(-slope);
        }
        double dev = 0.0;
        for (int l = 0; l < lags; ++l)
            dev = std::max(dev, std::abs(rep.empirical[l] - rep.theoretical[l]));
        rep.max_abs_deviation = dev / rep.c0_theoretical;
    }
    return rep;
}

}  // namespace sqha
