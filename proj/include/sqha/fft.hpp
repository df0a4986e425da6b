#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <vector>

namespace sqha {

// Thin thread-safe wrapper around FFTW's complex 1-D transforms.
//
// Plans are created with FFTW_ESTIMATE so planning never depends on runtime
// measurements (FFTW_MEASURE would pick algorithms by timing and break
// bit-level reproducibility). FFTW_UNALIGNED lets the cached plan execute on
// any caller buffer via the new-array interface. Plan creation is serialized
// behind a mutex; fftw_execute_dft itself is thread-safe.
class Fft {
  public:
    // Unnormalized forward transform, in place.
    static void forward(std::span<std::complex<double>> data) {
        execute(data, FFTW_FORWARD);
    }

    // Inverse transform, in place, normalized by 1/N.
    static void inverse(std::span<std::complex<double>> data) {
        execute(data, FFTW_BACKWARD);
        const double inv = 1.0 / static_cast<double>(data.size());
        for (auto& z : data) z *= inv;
    }

  private:
    static void execute(std::span<std::complex<double>> data, int sign) {
        fftw_plan plan = cached_plan(static_cast<int>(data.size()), sign);
        auto* p = reinterpret_cast<fftw_complex*>(data.data());
        fftw_execute_dft(plan, p, p);
    }

    static fftw_plan cached_plan(int n, int sign) {
        static std::mutex mtx;
        static std::map<std::pair<int, int>, fftw_plan> cache;
        std::lock_guard<std::mutex> lock(mtx);
        auto key = std::make_pair(n, sign);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        std::vector<std::complex<double>> scratch(static_cast<std::size_t>(n));
        auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan plan = fftw_plan_dft_1d(n, p, p, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        cache.emplace(key, plan);
        return plan;
    }
};

}  // namespace sqha
