// Correlated-noise generation and statistical validation.
//
// Kernel under test (unit dt):
//   C(delta) = k*Theta*mobility/(2 lambda_c^2) * exp(-(delta/lambda_c)^2)
//   lambda_c = f*hbar/sqrt(2 m k Theta)
// With hbar=m=k=f=1 and Theta=0.5, lambda_c = 1 exactly.
// Composing the two, C(0) = m k^2 mobility / (f hbar)^2 * Theta^2: the
// amplitude scales as Theta^2 overall.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "sqha/noise.hpp"

using namespace sqha;

namespace {

std::vector<NoiseField> draw_samples(const Grid1D& g, const NoiseParams& p, int count,
                                     std::uint64_t seed, double dt = 1.0) {
    std::vector<NoiseField> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        RngStream rng = RngStream::derive(seed, i, 0, 0);
        out.push_back(sample_noise(g, p, dt, rng, seed));
    }
    return out;
}

}  // namespace

TEST_CASE("correlation length formula", "[noise]") {
    NoiseParams p;
    p.theta = 0.5;
    CHECK(correlation_length(p) == Catch::Approx(1.0));

    // Square-root law: quadrupling Theta halves lambda_c exactly.
    NoiseParams p4 = p;
    p4.theta = 2.0;
    CHECK(correlation_length(p4) == Catch::Approx(0.5 * correlation_length(p)));

    NoiseParams p0;
    p0.theta = 0.0;
    CHECK_THROWS_AS(correlation_length(p0), Error);
    try {
        correlation_length(p0);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InfiniteCorrelation);
    }
}

TEST_CASE("zero-temperature noise is identically zero", "[noise]") {
    Grid1D g(64.0, 256);
    NoiseParams p;
    p.theta = 0.0;
    RngStream rng(7);
    auto y = sample_noise(g, p, 1e-3, rng);
    CHECK(max_abs(y) == 0.0);
}

TEST_CASE("unresolvable correlation length is rejected", "[noise]") {
    Grid1D g(256.0, 64);  // h = 4
    NoiseParams p;
    p.theta = 0.5;  // lambda_c = 1 < 2h = 8
    RngStream rng(7);
    CHECK_THROWS_AS(sample_noise(g, p, 1e-3, rng), Error);
    try {
        RngStream r2(7);
        sample_noise(g, p, 1e-3, r2);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnresolvedCorrelation);
    }
}

TEST_CASE("noise fields are zero-mean and deterministic per seed", "[noise]") {
    Grid1D g(64.0, 512);
    NoiseParams p;
    p.theta = 0.5;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        RngStream a(seed), b(seed);
        auto ya = sample_noise(g, p, 1e-2, a);
        auto yb = sample_noise(g, p, 1e-2, b);
        CHECK(std::abs(field_mean(ya)) < 1e-14);
        for (int j = 0; j < g.points(); ++j) REQUIRE(ya[j] == yb[j]);  // bit-identical
    }
    RngStream a(1), c(4);
    auto ya = sample_noise(g, p, 1e-2, a);
    auto yc = sample_noise(g, p, 1e-2, c);
    CHECK(l2_distance(ya, yc) > 0.0);
}

TEST_CASE("empirical covariance matches the kernel at 0 and lambda_c", "[noise]") {
    // lambda_c = 1 = 8h on a 512-point grid of extent 64.
    Grid1D g(64.0, 512);
    NoiseParams p;
    p.theta = 0.5;
    const double lambda_c = correlation_length(p);
    REQUIRE(lambda_c == Catch::Approx(8.0 * g.spacing()));

    auto samples = draw_samples(g, p, 10000, 42);
    const double c0_expected = p.variance_prefactor(lambda_c);  // kernel at delta=0
    auto rep = validate_noise(samples, c0_expected);

    CHECK(rep.c0_empirical == Catch::Approx(c0_expected).epsilon(0.05));

    // C(lambda_c)/C(0) = 1/e for the Gaussian kernel.
    const int l_at_lc = 8;
    CHECK(rep.empirical[l_at_lc] / rep.c0_empirical ==
          Catch::Approx(std::exp(-1.0)).epsilon(0.05));
}

TEST_CASE("fitted correlation length and far-field independence", "[noise]") {
    Grid1D g(64.0, 512);
    NoiseParams p;
    p.theta = 0.5;
    const double lambda_c = correlation_length(p);
    auto samples = draw_samples(g, p, 10000, 99);
    auto rep = validate_noise(samples, p.variance_prefactor(lambda_c));

    CHECK(rep.fitted_lambda_c == Catch::Approx(lambda_c).epsilon(0.05));

    // Beyond 5 lambda_c the empirical covariance is statistical zero:
    // 3 standard errors of the lag estimate, SE ~ C(0) sqrt(S/(M N)) with
    // S = sum_d exp(-2 d^2/lambda_c^2) = sqrt(pi/2) lambda_c/h.
    const double se = rep.c0_theoretical *
                      std::sqrt(std::sqrt(std::numbers::pi / 2.0) * (lambda_c / g.spacing()) /
                                (10000.0 * g.points()));
    for (int l = 0; l < static_cast<int>(rep.lag.size()); ++l) {
        if (rep.lag[l] > 5.0 * lambda_c) CHECK(std::abs(rep.empirical[l]) < 3.0 * se);
    }
}

TEST_CASE("covariance amplitude scales as Theta^2", "[noise]") {
    Grid1D g(64.0, 1024);
    std::vector<double> log_theta, log_c0;
    for (double theta : {0.5, 1.0, 2.0, 4.0}) {
        NoiseParams p;
        p.theta = theta;
        auto samples = draw_samples(g, p, 2000, 7);
        auto rep = validate_noise(std::span<const NoiseField>(samples),
                                  p.variance_prefactor(correlation_length(p)));
        log_theta.push_back(std::log(theta));
        log_c0.push_back(std::log(rep.c0_empirical));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(log_theta.size());
    for (std::size_t i = 0; i < log_theta.size(); ++i) {
        sx += log_theta[i];
        sy += log_c0[i];
        sxx += log_theta[i] * log_theta[i];
        sxy += log_theta[i] * log_c0[i];
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    CHECK(slope == Catch::Approx(2.0).margin(0.05));
}

TEST_CASE("independent seed groups agree within 3 sigma", "[noise]") {
    Grid1D g(64.0, 512);
    NoiseParams p;
    p.theta = 0.5;
    auto s1 = draw_samples(g, p, 4000, 1000);
    auto s2 = draw_samples(g, p, 4000, 2000);
    auto rep1 = validate_noise(std::span<const NoiseField>(s1));
    auto rep2 = validate_noise(std::span<const NoiseField>(s2));
    const double se = std::hypot(rep1.c0_stderr, rep2.c0_stderr);
    CHECK(std::abs(rep1.c0_empirical - rep2.c0_empirical) < 3.0 * se);
}

TEST_CASE("all-zero sample set has zero covariance", "[noise]") {
    Grid1D g(64.0, 128);
    std::vector<NoiseField> zeros;
    for (int i = 0; i < 1000; ++i)
        zeros.emplace_back(ScalarField::zeros(g), 8.0 * g.spacing(), 0);
    auto rep = validate_noise(zeros);
    for (double c : rep.empirical) CHECK(c == 0.0);
    CHECK(rep.fitted_lambda_c == 0.0);
}

TEST_CASE("validate_noise rejects mixed grids and tiny sample sets", "[noise]") {
    Grid1D g1(64.0, 128), g2(32.0, 128);
    std::vector<NoiseField> few;
    for (int i = 0; i < 10; ++i) few.emplace_back(ScalarField::zeros(g1), 1.0, 0);
    CHECK_THROWS_AS(validate_noise(few), Error);

    std::vector<NoiseField> mixed;
    for (int i = 0; i < 600; ++i) mixed.emplace_back(ScalarField::zeros(g1), 1.0, 0);
    for (int i = 0; i < 600; ++i) mixed.emplace_back(ScalarField::zeros(g2), 1.0, 0);
    CHECK_THROWS_AS(validate_noise(mixed), Error);
}

TEST_CASE("euler-maruyama scaling: per-step field variance goes as 1/dt", "[noise]") {
    Grid1D g(64.0, 512);
    NoiseParams p;
    p.theta = 0.5;
    auto s1 = draw_samples(g, p, 2000, 5, 1e-2);
    auto s2 = draw_samples(g, p, 2000, 5, 4e-2);
    auto r1 = validate_noise(std::span<const NoiseField>(s1));
    auto r2 = validate_noise(std::span<const NoiseField>(s2));
    CHECK(r1.c0_empirical / r2.c0_empirical == Catch::Approx(4.0).epsilon(0.1));
}
