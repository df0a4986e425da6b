#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace sqha {

// Counter-based random streams built on the splitmix64 mixer.
//
// Every consumer derives a fresh stream from (master_seed, a, b, c) at the
// point of use — ensemble member i at step t draws from derive(seed, i, t, tag)
// — so results are reproducible regardless of thread scheduling or worker
// count. Gaussian variates come from an explicit Box-Muller transform; no
// std::distribution is used, which keeps byte-level determinism across
// standard libraries.

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
    return mix64((h + kGolden) ^ mix64(v + kGolden));
}

}  // namespace detail

class RngStream {
  public:
    RngStream() = default;
    explicit RngStream(std::uint64_t seed) : state_(detail::mix64(seed + detail::kGolden)) {}

    // Derived stream for (member, step, tag). Pure function of its inputs.
    static RngStream derive(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                            std::uint64_t c = 0) {
        std::uint64_t h = detail::mix64(master + detail::kGolden);
        h = detail::combine(h, a);
        h = detail::combine(h, b);
        h = detail::combine(h, c);
        RngStream s;
        s.state_ = h;
        return s;
    }

    std::uint64_t next_u64() {
        state_ += detail::kGolden;
        return detail::mix64(state_);
    }

    // Uniform on (0, 1]; never returns 0 so log() below is safe.
    double next_uniform() {
        const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    void fill_gaussian(std::span<double> out) {
        for (double& x : out) x = next_gaussian();
    }

  private:
    std::uint64_t state_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace sqha
