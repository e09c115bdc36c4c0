#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mpsgemm {

// Deterministic random source. std::mt19937_64 output is fully specified by
// the standard; the distribution mappings below are hand-rolled because the
// std::*_distribution classes are implementation-defined and would break
// seed-for-seed reproducibility across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform in [0, n)
    std::uint64_t next_below(std::uint64_t n) {
        // rejection sampling keeps the mapping exactly uniform
        const std::uint64_t limit = n * (UINT64_MAX / n);
        std::uint64_t v = eng_();
        while (v >= limit) v = eng_();
        return v % n;
    }

    // uniform in [0, 1) with 53 random bits
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // uniform in (0, 1]
    double uniform01_pos() { return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53; }

    // uniform in (-1, 1), as float
    float uniform_pm1f() { return static_cast<float>(2.0 * uniform01() - 1.0); }

    // centered gaussian via Box-Muller
    double gaussian(double stddev) {
        if (have_spare_) {
            have_spare_ = false;
            return spare_ * stddev;
        }
        const double u1 = uniform01_pos();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a) * stddev;
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace mpsgemm
